"""Counters for tracking running quantities during training.

This module defines the Counter class (an incrementable record of a
single measure) and the CounterCollection class, which manages the
counters of one owner (typically a trainer).

Key Features:
- Counter: Uses __slots__ to minimize memory usage; supports
  incrementing, resetting and type validation.
- CounterCollection: Provides dictionary-like access and batch counter
  creation via add_counters. Transient counters hold per-interval sums
  (eg. loss components between two log lines) and are reset together;
  persistent counters hold run-long tallies (eg. skipped optimizer
  steps).

"""

from __future__ import annotations

from collections.abc import Iterator
from numbers import Real
from typing import Any, Callable


__all__ = [
    "Counter",
    "CounterCollection",
]


class Counter:
    """
    An incrementable counter for tracking a single numerical quantity.
    
    Attributes
    ----------
    name : str
        A unique identifier for this counter.
    value : Real
        The current numeric value of the counter.
    persistent : bool
        Flag indicating whether the counter is persistent (True) or
        transient (False). Transient counters are periodically reset.
    samples : int
        The number of increments since the last reset.
    
    Notes
    -----
    The stored value is always converted with the counter's type, so an
    `int` counter stays integral however it is incremented.
    """
    
    __slots__ = ("name", "_value", "_type", "persistent", "samples",)
    
    
    ##################
    # Static Methods #
    ##################
    
    @staticmethod
    def validate(value: Any, type_: Callable[[Any], Real]) -> None:
        if isinstance(value, bool) or not isinstance(value, Real):
            raise ValueError(
                f"'value' must be a real number; got {type(value).__name__} instead."
            )
        if not isinstance(type_, type) or not issubclass(type_, Real):
            raise ValueError(
                f"'type_' must be a real number type; got {type_!r} instead."
            )
    
    
    ###################
    # Special Methods #
    ###################
    
    def __init__(
        self,
        name: str,
        init_value: Real = 0,
        type_: Callable[[Any], Real] = float,
        persistent: bool = False
    ) -> None:
        self.validate(init_value, type_)
        
        self.name: str = name
        self._value: Real = type_(init_value)
        self._type = type_
        self.persistent = persistent
        self.samples = 0
    
    def __repr__(self) -> str:
        return f"Counter(name={self.name}, value={self.value}, type_={self._type})"
    
    def __str__(self) -> str:
        return f"'{self.name}' = {self.value}"
    
    
    ##############
    # Properties #
    ##############
    
    @property
    def value(self) -> Real:
        """Returns the value of the counter."""
        return self._value
    
    @property
    def mean(self) -> float:
        """The average increment since the last reset; nan before the first."""
        if not self.samples:
            return float("nan")
        return self._value / self.samples
    
    @property
    def transient(self) -> bool:
        """Returns whether the counter can be reset or not."""
        return not self.persistent
    
    
    ###########
    # Methods #
    ###########
    
    def reset(self, value: Real = 0) -> None:
        """Sets the counter (if it is not persistent), defaults to 0."""
        if not self.persistent:
            self.validate(value, self._type)
            self._value = self._type(value)
            self.samples = 0
    
    def increment(self, amount: Real = 1) -> None:
        """Increases the counter by an amount, defaults to 1."""
        self.validate(amount, self._type)
        self._value = self._type(self.value + amount)
        self.samples += 1


class CounterCollection:
    """
    A collection for managing multiple Counter objects.
    
    Attributes
    ----------
    owner : object
        The object whose activity the counters record.
    
    Notes
    -----
    Direct assignment and deletion (via __setitem__ and __delitem__) are
    disabled so that counter values can only be modified via increment()
    and reset().
    """
    
    
    ###################
    # Special Methods #
    ###################
    
    def __getitem__(self, name: str) -> Real:
        if name not in self._counters:
            raise KeyError(f"Counter '{name}' not found.")
        return self._counters[name].value
    
    def __setitem__(self, key, value):
        raise NotImplementedError(
            "Direct assignment is not allowed; use increment() or reset() instead."
        )
    
    def __delitem__(self, key):
        raise NotImplementedError("Deletion is not allowed.")
    
    def __iter__(self) -> Iterator[str]:
        return iter(self._counters)
    
    def __len__(self) -> int:
        return len(self._counters)
    
    def __contains__(self, key: str) -> bool:
        return key in self._counters
    
    def __init__(self, owner: object) -> None:
        self.owner = owner
        self._counters: dict[str, Counter] = {}
    
    def __repr__(self) -> str:
        return f"CounterCollection(owner={self.owner!r}, counters={self._counters})"
    
    
    ##############
    # Properties #
    ##############
    
    @property
    def all(self) -> dict[str, Counter]:
        """Returns the dictionary of counters."""
        return self._counters
    
    @property
    def transient(self) -> dict[str, Counter]:
        """Returns a dictionary of transient counters."""
        return {
            name: counter
            for name, counter in self._counters.items() if counter.transient
        }
    
    @property
    def persistent(self) -> dict[str, Counter]:
        """Returns a dictionary of persistent counters."""
        return {
            name: counter
            for name, counter in self._counters.items() if counter.persistent
        }
    
    
    ###########
    # Methods #
    ###########
    
    def add_counters(
        self,
        *null_counters: str,
        type_: type[Real] = float,
        persistent: bool = False,
        **init_counters: Real
    ) -> None:
        """
        Add one or more counters to the collection.
        
        Parameters
        ----------
        *null_counters : str
            Counter names that will be initialized with a value of 0.
        type_ : type, optional
            The numeric type for the counters (default: float).
        persistent : bool, optional
            If True, the counters cannot be reset (default: False).
        **init_counters : Real
            Counter names and their corresponding initial values.
        
        Raises
        ------
        ValueError
            If a counter with the same name already exists.
        
        Examples
        --------
        >>> counters = CounterCollection(trainer)
        >>> counters.add_counters("loss_image", "loss_mask")
        >>> counters.add_counters("skipped_steps", type_=int, persistent=True)
        """
        counters = {name: 0 for name in null_counters} | init_counters
        for name, init_value in counters.items():
            if name in self._counters:
                raise ValueError(f"Counter '{name}' already exists.")
            self._counters[name] = Counter(name, init_value, type_, persistent)
    
    def increment(self, name: str, amount: Real = 1) -> None:
        if name not in self._counters:
            raise KeyError(f"Counter '{name}' not found.")
        self._counters[name].increment(amount)
    
    def reset_transient(self) -> None:
        """Resets every transient counter to 0."""
        for counter in self.transient.values():
            counter.reset()
    
    def snapshot(self) -> dict[str, Real]:
        """Returns the current value of every counter."""
        return {name: counter.value for name, counter in self._counters.items()}
    
    def update(self, **amounts: Real) -> None:
        """Increments several counters at once."""
        for name, amount in amounts.items():
            self.increment(name, amount)
    
    def means(self, *names: str) -> dict[str, float]:
        """Returns the average increment of each named counter."""
        missing = [name for name in names if name not in self._counters]
        if missing:
            raise KeyError(f"Counter '{missing[0]}' not found.")
        return {name: self._counters[name].mean for name in names}
