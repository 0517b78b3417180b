# nomamec/db.py
from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator

from sqlalchemy import create_engine, event
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker, Session

from .models import Base

# one engine per ledger file
_engines: Dict[Path, Engine] = {}
_factories: Dict[Path, sessionmaker] = {}


def get_engine(db_path: Path) -> Engine:
    db_path = Path(db_path).resolve()
    engine = _engines.get(db_path)
    if engine is None:
        db_path.parent.mkdir(parents=True, exist_ok=True)
        engine = create_engine(f"sqlite:///{db_path}", future=True, echo=False)

        @event.listens_for(engine, "connect")
        def _set_sqlite_pragma(dbapi_conn, connection_record):
            cursor = dbapi_conn.cursor()
            cursor.execute("PRAGMA foreign_keys=ON")
            cursor.close()

        _engines[db_path] = engine
    return engine


def get_session_factory(db_path: Path) -> sessionmaker:
    key = Path(db_path).resolve()
    factory = _factories.get(key)
    if factory is None:
        factory = sessionmaker(bind=get_engine(key), class_=Session, autoflush=False, autocommit=False, future=True)
        _factories[key] = factory
    return factory


@contextmanager
def session_scope(db_path: Path) -> Iterator[Session]:
    session = get_session_factory(db_path)()
    try:
        yield session
        session.commit()
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()


def init_db(db_path: Path) -> None:
    Base.metadata.create_all(bind=get_engine(db_path))


def dispose(db_path: Path) -> None:
    """Close pooled connections so the file can be moved or deleted."""
    key = Path(db_path).resolve()
    engine = _engines.pop(key, None)
    _factories.pop(key, None)
    if engine is not None:
        engine.dispose()
