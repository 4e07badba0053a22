#!/usr/bin/env python3
"""Main module."""
import sys

import volrank

if __name__ == "__main__":
    sys.exit(volrank.main())
