import configparser
import sys

from sqlalchemy.orm import sessionmaker

from models.results import Comparison, Scenario, SweepPoint
from results_database import database_url, engine_for


def scenarios(engine, name=None, method=None):
    Session = sessionmaker(bind=engine)
    with Session() as session:
        query = session.query(Scenario)
        if name is not None:
            query = query.filter(Scenario.name == name)
        if method is not None:
            query = query.filter(Scenario.method == method)
        return query.order_by(Scenario.id).all()


def comparisons(engine, name=None):
    Session = sessionmaker(bind=engine)
    with Session() as session:
        query = session.query(Comparison)
        if name is not None:
            query = query.filter(Comparison.name == name)
        return query.order_by(Comparison.id).all()


def sweep_points(engine, sweep, axis=None):
    Session = sessionmaker(bind=engine)
    with Session() as session:
        query = session.query(SweepPoint).filter(SweepPoint.sweep == sweep)
        if axis is not None:
            query = query.filter(SweepPoint.axis == axis)
        return query.order_by(SweepPoint.value).all()


if __name__ == "__main__":
    config = configparser.ConfigParser()
    config.read("./triples.cfg")
    engine = engine_for(
        database_url(
            config.get("output", "directory", fallback="results"),
            config.get("output", "database", fallback=""),
        )
    )

    name = sys.argv[1] if len(sys.argv) > 1 else None
    for comparison in comparisons(engine, name):
        print(
            f"{comparison.name}: beta={comparison.beta}, M={comparison.num_atoms}, "
            f"P_in={comparison.drive_power}, epsilon={comparison.epsilon:.4f}"
        )
