"""Position-aware decoding of encoder output into the forecast horizon.

Learnable region, time-of-day, and day-of-week tables are fused with the
encoder output and a lifted copy of the raw features; the per-node step
vectors are flattened and regressed onto all L' * F' outputs in one shot.
"""

from __future__ import annotations

import torch
from torch import nn

from .encoder import _xavier_uniform
from .errors import ShapeError


class PositionalTables(nn.Module):
    """Free-form embedding tables indexed by region and calendar position."""

    def __init__(self, n_nodes: int, steps_per_day: int, d: int, generator=None, dtype=torch.float64):
        super().__init__()
        self.steps_per_day = steps_per_day

        def table(rows):
            t = torch.empty(rows, d, dtype=dtype)
            with torch.no_grad():
                t.normal_(0.0, 0.1, generator=generator)
            return nn.Parameter(t)

        self.region = table(n_nodes)
        self.tod = table(steps_per_day)
        self.dow = table(7)

    def lookup_positions(self, tod_index: torch.Tensor, dow_index: torch.Tensor):
        """Row-gather both calendar tables; raises IndexError on bad indices."""
        tod_index = torch.as_tensor(tod_index, dtype=torch.long)
        dow_index = torch.as_tensor(dow_index, dtype=torch.long)
        if tod_index.numel() and (tod_index.min() < 0 or tod_index.max() >= self.steps_per_day):
            raise IndexError(
                f"tod_index out of range [0,{self.steps_per_day}): "
                f"{int(tod_index.min())}..{int(tod_index.max())}"
            )
        if dow_index.numel() and (dow_index.min() < 0 or dow_index.max() >= 7):
            raise IndexError(f"dow_index out of range [0,7)")
        return self.tod[tod_index], self.dow[dow_index]


class PredictionHead(nn.Module):
    """Fusion layer plus the one-shot horizon regressor.

    Per (step, node) the fused vector is
    [H || region || tod || dow || lift(X)]; the L step vectors of each node
    are flattened into one vector before the final two-layer regressor.
    """

    def __init__(
        self,
        l_in: int,
        l_out: int,
        f_in: int,
        f_out: int,
        d: int,
        d_x: int,
        hidden: int,
        generator=None,
        dtype=torch.float64,
    ):
        super().__init__()
        self.l_in, self.l_out, self.f_out = l_in, l_out, f_out
        self.lift_w = nn.Parameter(torch.empty(f_in, d_x, dtype=dtype))
        self.lift_b = nn.Parameter(torch.zeros(d_x, dtype=dtype))
        fused = l_in * (4 * d + d_x)
        self.reg1_w = nn.Parameter(torch.empty(fused, hidden, dtype=dtype))
        self.reg1_b = nn.Parameter(torch.zeros(hidden, dtype=dtype))
        self.reg2_w = nn.Parameter(torch.empty(hidden, l_out * f_out, dtype=dtype))
        self.reg2_b = nn.Parameter(torch.zeros(l_out * f_out, dtype=dtype))
        _xavier_uniform(self.lift_w.data, f_in, d_x, generator)
        _xavier_uniform(self.reg1_w.data, fused, hidden, generator)
        _xavier_uniform(self.reg2_w.data, hidden, l_out * f_out, generator)

    def forward(
        self,
        h: torch.Tensor,
        x: torch.Tensor,
        tables: PositionalTables,
        tod_index: torch.Tensor,
        dow_index: torch.Tensor,
    ) -> torch.Tensor:
        """(..., L, N, d) embeddings + (..., L, N, F) raw features -> (..., L', N, F')."""
        squeeze = h.dim() == 3
        if squeeze:
            h, x = h.unsqueeze(0), x.unsqueeze(0)
            tod_index = torch.as_tensor(tod_index).reshape(1, -1)
            dow_index = torch.as_tensor(dow_index).reshape(1, -1)
        if h.shape[:3] != x.shape[:3]:
            raise ShapeError(f"embeddings {tuple(h.shape)} and features {tuple(x.shape)} disagree")
        b, l, n, _ = h.shape
        e_tod, e_dow = tables.lookup_positions(tod_index, dow_index)  # (B, L, d)
        e_region = tables.region.unsqueeze(0).unsqueeze(0).expand(b, l, -1, -1)
        lifted = x @ self.lift_w + self.lift_b
        fused = torch.cat(
            [
                h,
                e_region,
                e_tod.unsqueeze(2).expand(-1, -1, n, -1),
                e_dow.unsqueeze(2).expand(-1, -1, n, -1),
                lifted,
            ],
            dim=-1,
        )
        per_node = fused.permute(0, 2, 1, 3).reshape(b, n, -1)  # (B, N, L*(4d+dx))
        hidden = nn.functional.elu(per_node @ self.reg1_w + self.reg1_b)
        out = hidden @ self.reg2_w + self.reg2_b
        out = out.reshape(b, n, self.l_out, self.f_out).permute(0, 2, 1, 3)
        return out.squeeze(0) if squeeze else out
