import pytest

from kpmperf.core.item import DataItem, DataItemSet, Saveable, Loadable
from kpmperf.core.signal import Signal


def test_signal_connect_emit_disconnect():
    sig = Signal()
    got = []

    @sig.connect
    def listener(*args, **kwargs):
        got.append((args, kwargs))

    sig.emit(1, key='x')
    assert got == [((1,), {'key': 'x'})]
    assert len(sig) == 1
    sig.disconnect(listener)
    sig.emit(2)
    assert len(got) == 1 and len(sig) == 0


def test_data_item_meta_is_copied():
    meta = {'seed': 1}
    a, b = DataItem('a', meta), DataItem('a', meta)
    a.meta['seed'] = 2
    assert meta['seed'] == 1
    assert a.uuid != b.uuid


def test_item_set_signals():
    items = [DataItem(str(i)) for i in range(3)]
    added, removed, selection = [], [], []
    s = DataItemSet()
    s.itemadded.connect(added.append)
    s.itemremoved.connect(removed.append)
    s.selectionchanged.connect(lambda item, sel: selection.append((item.name, sel)))
    for item in items:
        s.add(item)
    assert added == items and len(s) == 3

    s.setSelection(items[1], False)
    s.setSelection(items[1], False)
    assert selection == [('1', False)]
    assert s.getSelected() == [items[0], items[2]]

    s.remove(items[0])
    assert removed == [items[0]]
    assert list(s) == items[1:]


def test_item_set_unselected_default():
    s = DataItemSet([DataItem('x')], selection_default=False)
    assert s.getSelected() == []


class _Text(DataItem, Saveable, Loadable):
    TYPE_NAME = 'Text'
    SAVE_FILE_EXTENTIONS = ['txt']
    LOAD_FILE_EXTENTIONS = ['txt']


def test_suffix_checks(tmp_path):
    item = _Text()
    path, ext = item._checkSaveSuffix(tmp_path / 'a.TXT')
    assert ext == 'txt'
    with pytest.raises(ValueError):
        item._checkSaveSuffix(tmp_path / 'a.csv')
    with pytest.raises(ValueError):
        _Text._checkLoadSuffix(tmp_path / 'a')
    with pytest.raises(NotImplementedError):
        item.saveToPath(path)
