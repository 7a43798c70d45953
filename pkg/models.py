import os
import datetime
import logging

from sqlalchemy import Column, Integer, String, Float, Boolean, DateTime, BigInteger, create_engine
from sqlalchemy.orm import DeclarativeBase, sessionmaker

logger = logging.getLogger(__name__)


def _utcnow():
    return datetime.datetime.now(datetime.timezone.utc)


class Base(DeclarativeBase):
    pass


def database_url(out_root="."):
    """Registry location: DATABASE_URL, or a SQLite file next to the bundles."""
    default = f"sqlite:///{os.path.abspath(os.path.join(out_root, 'runs.db'))}"
    return os.environ.get("DATABASE_URL", default)


def get_session(url):
    """Open a session on the registry, creating the tables on first use."""
    engine = create_engine(url, pool_pre_ping=True)
    Base.metadata.create_all(engine)
    return sessionmaker(bind=engine)()


class RunRecord(Base):
    """One executed experiment and where its bundle lives."""
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True)
    name = Column(String(200), nullable=False)
    preset = Column(String(100))
    policy = Column(String(50), nullable=False)
    seed = Column(BigInteger, nullable=False)

    # Digests identifying the inputs and the outcome
    scenario_digest = Column(String(64), nullable=False, index=True)
    workload_digest = Column(String(64), nullable=False)
    event_log_digest = Column(String(64), nullable=False)

    complete = Column(Boolean, default=False)
    makespan_s = Column(Float)
    total_cost = Column(Float)
    bundle_path = Column(String(500))
    created_at = Column(DateTime(timezone=True), default=_utcnow)
    notes = Column(String(500))

    def __repr__(self):
        return f"<RunRecord {self.name} seed={self.seed} ({self.event_log_digest[:12]})>"

    def as_dict(self):
        return {
            "id": self.id,
            "name": self.name,
            "preset": self.preset,
            "policy": self.policy,
            "seed": self.seed,
            "scenario_digest": self.scenario_digest,
            "event_log_digest": self.event_log_digest,
            "complete": self.complete,
            "makespan_s": self.makespan_s,
            "total_cost": self.total_cost,
            "bundle_path": self.bundle_path,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }

    @classmethod
    def record(cls, session, manifest, bundle_path, notes=None):
        """Insert a row for a finished run described by its manifest."""
        run = cls(
            name=manifest["scenario_name"],
            preset=manifest.get("preset"),
            policy=manifest["policy"],
            seed=manifest["seed"],
            scenario_digest=manifest["scenario_digest"],
            workload_digest=manifest["workload_digest"],
            event_log_digest=manifest["event_log_digest"],
            complete=manifest["complete"],
            makespan_s=manifest["makespan_s"],
            total_cost=manifest["total_cost"],
            bundle_path=str(bundle_path),
            created_at=_utcnow(),
            notes=notes,
        )
        session.add(run)
        session.commit()
        return run

    @classmethod
    def latest(cls, session, limit=20):
        """Most recent runs first"""
        return session.query(cls).order_by(cls.created_at.desc(), cls.id.desc()).limit(limit).all()

    @classmethod
    def find_by_digest(cls, session, scenario_digest):
        return session.query(cls).filter(cls.scenario_digest == scenario_digest).order_by(cls.id).all()
