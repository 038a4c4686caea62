"""Schemas for sparsity-class diagnostics"""

from pydantic import BaseModel, Field


class SparsityStats(BaseModel):
    """Row l_q mass and diagonal bound of a matrix, for the class U(q, s_p, M)"""
    q: float = Field(ge=0.0, le=1.0)
    max_row_lq: float = Field(ge=0.0)
    max_diag: float

    def member_of(self, s_p: float, m: float) -> bool:
        return self.max_diag <= m and self.max_row_lq <= s_p
