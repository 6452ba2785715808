"""Run the nine acceptance criteria outside pytest and print one line each."""
import runpy
from pathlib import Path

if __name__ == "__main__":
    runpy.run_path(str(Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py"), run_name="__main__")
