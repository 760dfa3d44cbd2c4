"""
Base repository and service interfaces for dependency injection.
"""
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, List, Optional


class Repository(ABC):
    """Base repository interface over a directory of files."""

    def __init__(self, root: Optional[Path] = None):
        self.root = Path(root) if root is not None else None

    def resolve(self, name: str) -> Path:
        """Resolve a name against the repository root."""
        path = Path(name)
        if self.root is not None and not path.is_absolute() and not path.exists():
            path = self.root / path
        return path

    @abstractmethod
    def get(self, key: Any) -> Optional[Any]:
        """Load one record."""
        pass

    @abstractmethod
    def list(self) -> List[Any]:
        """List available records."""
        pass


class Service(ABC):
    """Base service interface."""

    def __init__(self, repository: Optional[Repository] = None):
        self.repository = repository
