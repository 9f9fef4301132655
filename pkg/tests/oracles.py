"""Independent brute-force reference implementations used by the test suite.

Everything here is written with explicit Python loops over numpy scalars,
deliberately sharing no code with the package, so agreement between the
two is meaningful evidence. Shapes follow the package conventions:
features (L, N, F), spatial embeddings (N, ds), temporal (L, dt).
"""

import math

import numpy as np


def leaky_relu(x, slope=0.2):
    return x if x >= 0 else slope * x


def elu(x):
    return x if x >= 0 else math.exp(x) - 1.0


def embed_oracle(x, w0, b0):
    l, n, f = x.shape
    d = w0.shape[1]
    out = np.zeros((l, n, d))
    for i in range(l):
        for j in range(n):
            for a in range(d):
                acc = b0[a]
                for c in range(f):
                    acc += x[i, j, c] * w0[c, a]
                out[i, j, a] = acc
    return out


def project_spatial_oracle(x0, ws, bs):
    l, n, d = x0.shape
    ds = ws.shape[2]
    out = np.zeros((n, ds))
    for j in range(n):
        for a in range(ds):
            acc = bs[a]
            for i in range(l):
                for c in range(d):
                    acc += x0[i, j, c] * ws[i, c, a]
            out[j, a] = acc
    return out


def expand_spatial_oracle(hs, w1, b1):
    n, ds = hs.shape
    l, d, _ = w1.shape
    out = np.zeros((l, n, d))
    for i in range(l):
        for j in range(n):
            for a in range(d):
                acc = b1[i, a]
                for c in range(ds):
                    acc += w1[i, a, c] * hs[j, c]
                out[i, j, a] = acc
    return out


def project_temporal_oracle(hps, wt, bt):
    l, n, d = hps.shape
    dt = wt.shape[2]
    out = np.zeros((l, dt))
    for i in range(l):
        for a in range(dt):
            acc = bt[a]
            for j in range(n):
                for c in range(d):
                    acc += hps[i, j, c] * wt[j, c, a]
            out[i, a] = acc
    return out


def expand_temporal_oracle(ht, w2, b2):
    l, dt = ht.shape
    n, d, _ = w2.shape
    out = np.zeros((l, n, d))
    for i in range(l):
        for j in range(n):
            for a in range(d):
                acc = b2[j, a]
                for c in range(dt):
                    acc += w2[j, a, c] * ht[i, c]
                out[i, j, a] = acc
    return out


def gat_oracle(x, adjacency, weight, attn, edge_weights=None, slope=0.2):
    """Multi-head attention by explicit enumeration.

    ``adjacency[v][u] == 1`` means an arc v -> u, so node j attends over
    its in-neighbors {v : adjacency[v][j] == 1} plus itself. Head outputs
    are summed at full width. ``edge_weights`` maps (source, target) arcs
    to multipliers of the post-softmax coefficients (self stays 1, no
    renormalization).
    """
    m, dim = x.shape
    heads = weight.shape[0]
    out = np.zeros((m, dim))
    for j in range(m):
        neighborhood = [j] + [v for v in range(m) if adjacency[v][j] == 1 and v != j]
        for k in range(heads):
            z = {jp: weight[k] @ x[jp] for jp in neighborhood}
            a_self, a_other = attn[k, :dim], attn[k, dim:]
            logits = [leaky_relu(a_self @ z[j] + a_other @ z[jp], slope) for jp in neighborhood]
            mx = max(logits)
            exps = [math.exp(v - mx) for v in logits]
            denom = sum(exps)
            for jp, e in zip(neighborhood, exps):
                alpha = e / denom
                if edge_weights is not None and jp != j:
                    alpha *= edge_weights[(jp, j)]
                out[j] += alpha * z[jp]
    return out


def gat_stack_oracle(x, adjacency, layers, edge_weights=None):
    """Stacked attention layers with an ELU between consecutive layers."""
    h = x
    for idx, (weight, attn) in enumerate(layers):
        if idx > 0:
            h = np.vectorize(elu)(h)
        h = gat_oracle(h, adjacency, weight, attn, edge_weights)
    return h


def encode_oracle(x, spatial_adj, temporal_adj, params, spatial_weights=None, temporal_weights=None):
    """Composition of the stage oracles; returns (H, Hs, Ht)."""
    x0 = embed_oracle(x, params["embed_w"], params["embed_b"])
    xs = project_spatial_oracle(x0, params["space_proj_w"], params["space_proj_b"])
    hs = gat_stack_oracle(xs, spatial_adj, params["spatial_gats"], spatial_weights)
    hps = expand_spatial_oracle(hs, params["space_expand_w"], params["space_expand_b"])
    xt = project_temporal_oracle(hps, params["time_proj_w"], params["time_proj_b"])
    ht = gat_stack_oracle(xt, temporal_adj, params["temporal_gats"], temporal_weights)
    h = expand_temporal_oracle(ht, params["time_expand_w"], params["time_expand_b"])
    return h, hs, ht


def edge_score_oracle(node_embeds, edges, w1, b1, w2, b2):
    """Layer-by-layer MLP over concatenated endpoint embeddings."""
    logits = {}
    for v, u in edges:
        pair = np.concatenate([node_embeds[v], node_embeds[u]])
        hidden = np.array([elu(w1[r] @ pair + b1[r]) for r in range(len(b1))])
        logits[(v, u)] = float(w2 @ hidden + b2)
    return logits


def predict_oracle(h, x, region, tod_rows, dow_rows, lift_w, lift_b, reg1_w, reg1_b, reg2_w, reg2_b, l_out, f_out):
    """Concatenate-and-affine head unrolled per node."""
    l, n, d = h.shape
    outputs = np.zeros((l_out, n, f_out))
    for j in range(n):
        pieces = []
        for i in range(l):
            lifted = x[i, j] @ lift_w + lift_b
            pieces.append(np.concatenate([h[i, j], region[j], tod_rows[i], dow_rows[i], lifted]))
        flat = np.concatenate(pieces)
        hidden = np.array([elu(v) for v in flat @ reg1_w + reg1_b])
        out = hidden @ reg2_w + reg2_b
        outputs[:, j, :] = out.reshape(l_out, f_out)
    return outputs


def huber_oracle(y, y_hat, delta):
    total = 0.0
    flat_y = np.asarray(y).ravel()
    flat_p = np.asarray(y_hat).ravel()
    for a, b in zip(flat_y, flat_p):
        e = abs(a - b)
        total += 0.5 * e * e if e <= delta else delta * (e - 0.5 * delta)
    return total / len(flat_y)


def mse_oracle(y, y_hat):
    flat_y = np.asarray(y).ravel()
    flat_p = np.asarray(y_hat).ravel()
    return sum((a - b) ** 2 for a, b in zip(flat_y, flat_p)) / len(flat_y)


def kl_oracle(probs, r):
    total = 0.0
    for p in probs.values() if isinstance(probs, dict) else probs:
        total += p * math.log(p / r) + (1 - p) * math.log((1 - p) / (1 - r))
    return total


def mc_kl_estimate(p, r, n, rng):
    """Monte-Carlo KL(Bern(p) || Bern(r)) by sampling the Bernoulli."""
    draws = rng.random(n) < p
    logs = np.where(draws, math.log(p / r), math.log((1 - p) / (1 - r)))
    return float(logs.mean())


def mc_gumbel_mean(logit, tau, n, rng):
    """Monte-Carlo E[sigmoid((logit + g)/tau)], g ~ Gumbel(0,1)."""
    u = rng.random(n)
    g = -np.log(-np.log(u))
    return float((1.0 / (1.0 + np.exp(-(logit + g) / tau))).mean())


def central_difference_gradient(f, array, eps=1e-6):
    """Central finite-difference gradient of scalar f with respect to array."""
    grad = np.zeros_like(array, dtype=np.float64)
    it = np.nditer(array, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = array[idx]
        array[idx] = orig + eps
        plus = f()
        array[idx] = orig - eps
        minus = f()
        array[idx] = orig
        grad[idx] = (plus - minus) / (2 * eps)
        it.iternext()
    return grad


def relative_error(a, b, floor=1e-8):
    """Max elementwise relative error with a floor for near-zero pairs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / scale))


def gradient_agreement(analytic, fd, floor=1e-4):
    """Relative disagreement of two gradient arrays, max-norm scaled.

    Entries are compared against the array's largest magnitude, floored so
    that arrays whose true gradients sit near the finite-difference noise
    level (~1e-9 absolute for O(1..100) losses) are judged absolutely
    rather than drowned in relative noise.
    """
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(fd, dtype=np.float64)
    scale = max(np.abs(a).max(), np.abs(b).max(), floor)
    return float(np.abs(a - b).max() / scale)
