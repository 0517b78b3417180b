# nomamec/models.py
from __future__ import annotations

from datetime import datetime, timezone
import uuid
from typing import Optional

from sqlalchemy import String, Integer, Float, Text, DateTime, ForeignKey, Index
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def run_id() -> str:
    return f"E-{utcnow().strftime('%Y%m%d-%H%M%S')}-{uuid.uuid4().hex[:6]}"


class Base(DeclarativeBase):
    pass


class ExperimentRun(Base):
    __tablename__ = "experiment_runs"
    id: Mapped[str] = mapped_column(String, primary_key=True, default=run_id)
    started_at: Mapped[datetime] = mapped_column(DateTime(timezone=True), default=utcnow)
    ended_at: Mapped[Optional[datetime]] = mapped_column(DateTime(timezone=True), nullable=True)
    scenario: Mapped[str] = mapped_column(String)
    sweep_variable: Mapped[str] = mapped_column(String, default="none")
    status: Mapped[str] = mapped_column(String, default="running")  # running|done|failed
    plan_json: Mapped[str] = mapped_column(Text)
    config_json: Mapped[Optional[str]] = mapped_column(Text, nullable=True)

    results: Mapped[list["ResultRecord"]] = relationship(back_populates="run", cascade="all, delete-orphan")


class ResultRecord(Base):
    __tablename__ = "results"
    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    run_id: Mapped[str] = mapped_column(String, ForeignKey("experiment_runs.id", ondelete="CASCADE"))
    algorithm: Mapped[str] = mapped_column(String)
    sweep_value: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    seed: Mapped[int] = mapped_column(Integer)
    mean_energy_j: Mapped[float] = mapped_column(Float)
    feasible_fraction: Mapped[float] = mapped_column(Float, default=1.0)
    episodes_to_converge: Mapped[Optional[int]] = mapped_column(Integer, nullable=True)
    wall_time_s: Mapped[float] = mapped_column(Float, default=0.0)

    run: Mapped["ExperimentRun"] = relationship(back_populates="results")


Index("ix_results_run_algorithm", ResultRecord.run_id, ResultRecord.algorithm)
