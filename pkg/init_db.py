"""
Creates the run-registry tables for the GenFL simulator.

Usage:
    python init_db.py
"""
import os
import sys

# Add project root to path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from genfl.config import DATABASE_URL
from genfl.database import Base, init_db as create_tables


def init_db():
    print(f"Initializing run registry at {DATABASE_URL} ...")
    try:
        create_tables()
        print("Tables ready:")
        for table in Base.metadata.sorted_tables:
            print(f"   - {table.name}")
    except Exception as e:
        print(f"Error during initialization: {str(e)}")
        sys.exit(1)


if __name__ == "__main__":
    init_db()
