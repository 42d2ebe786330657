import asyncio
import json
import os
import tempfile
from typing import Any, Dict, Iterable, List, Tuple

from aiopath import AsyncPath

from cattle_clip.errors import DataError


class FileManager:
    """
    Handles file operations for the pipelines: input discovery, JSON-lines
    reading with line-numbered errors, and atomic output writes.
    """

    def __init__(self, input_files_path: str, output_files_path: str = ""):
        """
        Initialize the file manager.

        Args:
            input_files_path: File or directory the pipeline reads from
            output_files_path: Directory path for output files
        """
        self.input_files_path = str(input_files_path)
        self.output_files_path = str(output_files_path)
        self.path = AsyncPath(self.input_files_path)

    async def __validate_file_path(self, expect_dir: bool):
        """Validate that the input path exists and has the expected kind"""
        if not await self.path.exists():
            raise FileNotFoundError(f"Path {self.input_files_path} not found")
        if expect_dir and not await self.path.is_dir():
            raise ValueError(f"Path {self.input_files_path} is not a directory")
        if not expect_dir and await self.path.is_dir():
            raise ValueError(f"Path {self.input_files_path} is a directory, expected a file")

    async def load_multiple_files(self, file_type: str) -> List[str]:
        """
        Load multiple file paths, sorted by name

        Args:
            file_type: File extension to search for (e.g., ".png")

        Returns:
            List of file paths matching the extension
        """
        await self.__validate_file_path(expect_dir=True)
        files = []
        async for file in self.path.glob(f"*{file_type}"):
            files.append(str(file))
        return sorted(files)

    async def read_jsonl(self) -> List[Tuple[int, Dict[str, Any]]]:
        """
        Read a JSON-lines file.

        Returns:
            (1-based line number, decoded object) for every non-blank line
        """
        await self.__validate_file_path(expect_dir=False)
        text = await self.path.read_text(encoding="utf-8")
        rows = []
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{self.input_files_path}:{line_no}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DataError(f"{self.input_files_path}:{line_no}: expected a JSON object")
            rows.append((line_no, obj))
        return rows

    async def ensure_output_directory(self):
        """Ensure the output directory exists"""
        output_path = AsyncPath(self.output_files_path)
        if not await output_path.exists():
            try:
                os.makedirs(self.output_files_path, exist_ok=True)
            except OSError as exc:
                raise DataError(f"Cannot create output directory {self.output_files_path}: {exc}") from exc
        elif not await output_path.is_dir():
            raise DataError(f"Output path {self.output_files_path} is not a directory")

    def output_path(self, name: str) -> str:
        return os.path.join(self.output_files_path, name)

    async def write_jsonl(self, name: str, records: Iterable[Dict[str, Any]]) -> str:
        """Write records as JSON lines into the output directory, atomically"""
        text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
        return await self.write_text(name, text)

    async def write_text(self, name: str, text: str) -> str:
        await self.ensure_output_directory()
        target = self.output_path(name)
        loop = asyncio.get_running_loop()
        await loop.run_in_executor(None, write_atomic, target, text.encode("utf-8"))
        return target


def write_atomic(target: str, payload: bytes) -> None:
    """Write bytes to a temporary sibling and move it into place"""
    directory = os.path.dirname(os.path.abspath(target))
    fd, tmp_name = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(target))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
