"""Result records shared by the simulation driver and post-hoc analysis."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class IterationRecord:
    iteration: int
    queried_ids: list[str]
    n_labeled: int
    accuracy: float
    micro_f1: float
    g_d: float | None
    g_u: float | None
    select_ms: float
    train_ms: float


@dataclass
class AlRunResult:
    strategy: str
    seed: int
    records: list[IterationRecord]
    ceiling_accuracy: float | None = None
    ceiling_micro_f1: float | None = None
    partial: bool = False

    @property
    def final_accuracy(self) -> float:
        return self.records[-1].accuracy

    @property
    def final_micro_f1(self) -> float:
        return self.records[-1].micro_f1

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "partial": self.partial,
            "ceiling_accuracy": self.ceiling_accuracy,
            "ceiling_micro_f1": self.ceiling_micro_f1,
            "final_accuracy": self.final_accuracy,
            "final_micro_f1": self.final_micro_f1,
            "records": [asdict(r) for r in self.records],
        }

    @classmethod
    def from_dict(cls, blob: dict) -> "AlRunResult":
        return cls(
            strategy=blob["strategy"],
            seed=blob["seed"],
            partial=blob.get("partial", False),
            ceiling_accuracy=blob.get("ceiling_accuracy"),
            ceiling_micro_f1=blob.get("ceiling_micro_f1"),
            records=[
                IterationRecord(
                    iteration=r["iteration"],
                    queried_ids=list(r["queried_ids"]),
                    n_labeled=r["n_labeled"],
                    accuracy=r["accuracy"],
                    micro_f1=r["micro_f1"],
                    g_d=r.get("g_d"),
                    g_u=r.get("g_u"),
                    select_ms=r["select_ms"],
                    train_ms=r["train_ms"],
                )
                for r in blob["records"]
            ],
        )


RAW_COLUMNS = (
    "strategy",
    "seed",
    "iteration",
    "n_labeled",
    "accuracy",
    "micro_f1",
    "g_d",
    "g_u",
    "select_ms",
    "train_ms",
)
