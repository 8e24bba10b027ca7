import logging
from typing import Dict, List, Optional, Type

from src.backends.base_backend import BaseBackend
from src.backends.monolithic_backend import MonolithicBackend
from src.backends.sddp_backend import SddpBackend
from src.types import ConfigurationError, RunConfig

logger = logging.getLogger("backend_manager")


class BackendManager:
    def __init__(self, config: RunConfig):
        self.config = config
        self.backends: Dict[str, BaseBackend] = {}

    @staticmethod
    def _class_name_to_type(class_name: str) -> Optional[Type[BaseBackend]]:
        if class_name == "mono":
            return MonolithicBackend
        elif class_name == "sddp":
            return SddpBackend
        return None

    def _register_backend(self, name: str) -> BaseBackend:
        backend_class = self._class_name_to_type(name)
        if backend_class is None:
            raise ConfigurationError(f"Unknown backend '{name}'. Available: {', '.join(self.available())}")
        try:
            backend = backend_class(self.config)
        except Exception as e:
            logger.error(f"Failed to initialize backend {name}: {e}")
            raise
        self.backends[name] = backend
        return backend

    def get(self, name: Optional[str] = None) -> BaseBackend:
        name = name or self.config.backend
        return self.backends.get(name) or self._register_backend(name)

    @staticmethod
    def available() -> List[str]:
        return ["mono", "sddp"]

    def list_backends(self) -> None:
        logger.info("\nAVAILABLE BACKENDS:")
        for name in self.available():
            marker = " (selected)" if name == self.config.backend else ""
            try:
                logger.info(f"- {name}{marker}: {self.get(name).describe()}")
            except Exception as e:
                logger.info(f"- {name}{marker}: ❌ {e}")
