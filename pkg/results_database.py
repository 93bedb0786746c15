import configparser
from pathlib import Path

from sqlalchemy import create_engine, inspect

import models.results as Results


def database_url(directory, url=None):
    """SQLAlchemy URL of the results database; SQLite inside ``directory`` by default."""
    if url:
        return url
    return f"sqlite:///{Path(directory) / 'triples.db'}"


def engine_for(url):
    return create_engine(url)


def create_tables(engine):
    Results.Base.metadata.create_all(engine)
    return sorted(inspect(engine).get_table_names())


if __name__ == "__main__":
    config = configparser.ConfigParser()
    config.read("./triples.cfg")

    directory = config.get("output", "directory", fallback="results")
    url = config.get("output", "database", fallback="")

    Path(directory).mkdir(parents=True, exist_ok=True)
    engine = engine_for(database_url(directory, url))
    print(create_tables(engine))
