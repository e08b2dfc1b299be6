# Minimal observer hook, used to report sweep progress

class Signal:
    """Signal that forwards emitted values to every connected listener.

    A :obj:`Signal` is owned as a visible attribute of an object, for example
    :obj:`.core.item.DataItemSet.itemadded`. Listeners are called in the order
    they were connected.
    """

    def __init__(self):
        self.listeners = []

    def connect(self, f):
        """Connect a listener callable.

        Returns the callable so this can be used as a decorator.

        Parameters
        ----------
        f : :obj:`callable`
            The listener to connect to the signal.
        """
        self.listeners.append(f)
        return f

    def disconnect(self, f):
        """Disconnect a previously connected listener."""
        self.listeners.remove(f)

    def emit(self, *args, **kwargs):
        """Call every listener with the given arguments."""
        for f in list(self.listeners):
            f(*args, **kwargs)

    def __len__(self):
        return len(self.listeners)
