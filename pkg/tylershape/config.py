"""Library and benchmark configuration using Pydantic Settings"""


from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="TYLERSHAPE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    # Fixed-point solvers
    tol: float = Field(default=1e-12)
    max_iter: int = Field(default=1400)
    condition_limit: float = Field(default=1e14)

    # Regularization
    default_alpha: float = Field(default=10.0)
    convergence_ratio: float = Field(default=0.5)  # R in the alpha rule
    alpha_safety: float = Field(default=0.01)

    # Thresholding
    threshold_multiplier: float = Field(default=1.0)

    # Outlier screening
    level_set_ratio: float = Field(default=0.7)
    kde_grid_points: int = Field(default=512)
    min_kept_samples: int = Field(default=10)

    # Experiments
    realizations: int = Field(default=20)
    master_seed: int = Field(default=20190)
    output_dir: str = Field(default="results")
    workers: int = Field(default=1)

    # Logging
    log_level: str = Field(default="INFO")
    log_format: str = Field(default="text")

    @field_validator("log_level")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        """Accept any casing for the level name"""
        return v.upper()

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        if v not in ("json", "text"):
            raise ValueError("log_format must be 'json' or 'text'")
        return v

    def validate_configuration(self) -> dict[str, list[str]]:
        """Validate configuration and return any issues"""
        issues: dict[str, list[str]] = {"errors": [], "warnings": []}

        if not 0.0 < self.convergence_ratio < 1.0:
            issues["errors"].append(
                f"convergence_ratio must lie in (0, 1), got {self.convergence_ratio}"
            )
        if not 0.0 < self.level_set_ratio < 1.0:
            issues["errors"].append(
                f"level_set_ratio must lie in (0, 1), got {self.level_set_ratio}"
            )
        if self.tol <= 0:
            issues["errors"].append(f"tol must be positive, got {self.tol}")
        elif self.tol < 1e-15:
            issues["warnings"].append(
                f"tol={self.tol} is below double precision; solvers will run to max_iter"
            )
        if self.max_iter < 1:
            issues["errors"].append(f"max_iter must be at least 1, got {self.max_iter}")
        if self.workers < 1:
            issues["errors"].append(f"workers must be at least 1, got {self.workers}")
        if self.realizations < 10:
            issues["warnings"].append(
                f"Only {self.realizations} realizations; LRE values will be noisy"
            )

        return issues


settings = Settings()
