from sqlalchemy import Column
from sqlalchemy.orm import declarative_base
from sqlalchemy.types import DateTime, Float, Integer, String, Text

Base = declarative_base()


class Scenario(Base):
    """One computed correlation grid.

    A scenario run with method "both" produces two rows (one per method)
    sharing the same name.
    """

    __tablename__ = "scenarios"

    id = Column(Integer, primary_key=True, autoincrement=True)
    name = Column(String(127))
    method = Column(String(31))  # (enum) diagrammatic, oracle
    kind = Column(String(31))  # (enum) g2, g3, g3_connected, ...
    grid = Column(String(15))  # time or jacobi
    beta = Column(Float)
    num_atoms = Column(Integer)
    gamma_tot = Column(Float)
    drive_power = Column(Float)
    optical_depth = Column(Float)
    points = Column(Integer)
    g3c_origin = Column(Float)
    runtime = Column(Float)  # seconds
    csv_path = Column(Text)
    version = Column(String(63))
    created = Column(DateTime)


class Comparison(Base):
    """Relative Frobenius distance between oracle and diagrammatic grids."""

    __tablename__ = "comparisons"

    id = Column(Integer, primary_key=True, autoincrement=True)
    name = Column(String(127))
    kind = Column(String(31))
    beta = Column(Float)
    num_atoms = Column(Integer)
    drive_power = Column(Float)
    epsilon = Column(Float)
    max_deviation = Column(Float)
    points = Column(Integer)
    created = Column(DateTime)


class SweepPoint(Base):
    __tablename__ = "sweep_points"

    id = Column(Integer, primary_key=True, autoincrement=True)
    sweep = Column(String(127))
    axis = Column(String(15))  # M, P_in or beta
    value = Column(Float)
    beta = Column(Float)
    num_atoms = Column(Integer)
    drive_power = Column(Float)
    optical_depth = Column(Float)
    epsilon = Column(Float)
    g3c_origin = Column(Float)
    count_rate = Column(Float)  # Hz
    error = Column(Text)
    created = Column(DateTime)
