"""Run the acceptance criteria and print one PASS/FAIL line per criterion."""
import sys
from pathlib import Path

import pytest

if __name__ == "__main__":
    tests = Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py"
    raise SystemExit(pytest.main([str(tests), "-q", "-s", "-p", "no:cacheprovider", *sys.argv[1:]]))
