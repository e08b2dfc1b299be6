from .signal import Signal

from pathlib import Path
import uuid


class DataItem:
    """Base class of named data objects with free-form metadata.

    Matrices, block vectors, moment series and DOS curves derive from it.

    Attributes
    ----------
    TYPE_NAME : :obj:`str`
        Class-level label used in messages, e.g. "SparseMatrix".
    name : :obj:`str`
        Human-readable label, may repeat between items.
    uuid : :obj:`uuid.UUID`
        Identity of the item; cached simulation results are keyed on it.
    meta : :obj:`dict`
        Provenance such as seed, domain, stage or source file.
    """

    TYPE_NAME = "DataItem"

    def __init__(self, name=None, meta=None):
        self.name = name or ""
        self.uuid = uuid.uuid4()
        # private copy, callers often reuse one dict for several items
        self.meta = dict(meta) if meta else {}


class Saveable:
    """Mixin for items written to disk.

    Subclasses list the suffixes they write in ``SAVE_FILE_EXTENTIONS``
    (lowercase, no dot) and implement :meth:`saveToPath`.
    """

    SAVE_FILE_EXTENTIONS = []

    def saveToPath(self, path):
        """Write the item to ``path``; the suffix selects the format."""
        raise NotImplementedError(f'{type(self).__name__} cannot be saved.')

    def _checkSaveSuffix(self, path):
        path = Path(path)
        ext = path.suffix.lstrip('.').lower()
        if ext not in self.SAVE_FILE_EXTENTIONS:
            raise ValueError(f'Cannot save {self.TYPE_NAME} to "{path.suffix}" '
                f'file. Supported: {self.SAVE_FILE_EXTENTIONS}.')
        return path, ext


class Loadable:
    """Mixin for items read back from disk.

    Subclasses list the suffixes they read in ``LOAD_FILE_EXTENTIONS`` and
    implement the classmethod :meth:`loadFromPath`.
    """

    LOAD_FILE_EXTENTIONS = []

    @classmethod
    def loadFromPath(cls, path):
        """Build an instance from the file at ``path``."""
        raise NotImplementedError(f'{cls.__name__} cannot be loaded.')

    @classmethod
    def _checkLoadSuffix(cls, path):
        path = Path(path)
        ext = path.suffix.lstrip('.').lower()
        if ext not in cls.LOAD_FILE_EXTENTIONS:
            raise ValueError(f'Cannot load {cls.TYPE_NAME} from "{path.suffix}" '
                f'file. Supported: {cls.LOAD_FILE_EXTENTIONS}.')
        return path, ext


class DataItemSet:
    """Insertion-ordered collection with a per-item selection flag.

    :obj:`.bench.harness.BenchResultSet` builds on it so the CLI can log each
    benchmark result the moment a sweep produces it, and so exports can be
    restricted to the selected results.

    Attributes
    ----------
    itemadded : :obj:`.core.signal.Signal`
        Emitted with the new item after :meth:`add`.
    itemremoved : :obj:`.core.signal.Signal`
        Emitted with the item after :meth:`remove`.
    selectionchanged : :obj:`.core.signal.Signal`
        Emitted as ``(item, selected)`` when a flag actually flips.
    """

    def __init__(self, items=(), selection_default=True):
        self.itemadded = Signal()
        self.itemremoved = Signal()
        self.selectionchanged = Signal()
        self.items = []
        self.selections = {}
        self.selection_default = selection_default
        for item in items or ():
            self.add(item)

    def add(self, item):
        self.items.append(item)
        self.selections[id(item)] = self.selection_default
        self.itemadded.emit(item)

    def remove(self, item):
        self.items.remove(item)
        del self.selections[id(item)]
        self.itemremoved.emit(item)

    def setSelection(self, item, sel):
        """Set the selection flag of ``item``; emits only on change."""
        if self.selections[id(item)] == sel:
            return
        self.selections[id(item)] = sel
        self.selectionchanged.emit(item, sel)

    def getSelection(self, item):
        return self.selections[id(item)]

    def getSelected(self):
        """Selected items in insertion order."""
        return [item for item in self.items if self.selections[id(item)]]

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)
