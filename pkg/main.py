import asyncio
import sys

from cattle_clip.cli import main

if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
