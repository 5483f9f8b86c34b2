#!/usr/bin/env python3
"""Entry point that launches the heun-connect HTTP service via uvicorn."""

from __future__ import annotations

import os

from heun_connect.cli import main as cli_main


def main() -> int:
    port = os.environ.get("PORT", "8000")
    host = os.environ.get("HOST", "127.0.0.1")
    return cli_main(["serve", "--host", host, "--port", port])


if __name__ == "__main__":
    raise SystemExit(main())
