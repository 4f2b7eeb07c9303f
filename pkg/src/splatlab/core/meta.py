"""The metaclass of the differentiable primitives of splatlab.

A primitive is identified by its `name`, which is what a NumericFault
reports; its `arity` is checked by `Function.apply`. Both are frozen
when the class is created, and names are unique across the package.

"""

from __future__ import annotations

from abc import ABCMeta
from typing import Any


__all__ = [
    "PrimitiveType",
    "class_constant",
]


class class_constant:
    """A read-only class attribute, also read-only on instances."""

    __slots__ = ("value", "attr")

    def __init__(self, value: Any) -> None:
        self.value = value
        self.attr = "?"

    def __set_name__(self, owner: type, name: str) -> None:
        self.attr = name

    def __get__(self, instance: Any, owner: type | None = None) -> Any:
        return self.value

    def __set__(self, instance: Any, value: Any) -> None:
        raise AttributeError(f"primitive {self.attr!r} cannot be modified")

    def __delete__(self, instance: Any) -> None:
        raise AttributeError(f"primitive {self.attr!r} cannot be deleted")

    def __repr__(self) -> str:
        return f"class_constant({self.value!r})"


class PrimitiveType(ABCMeta):
    """Metaclass for diffcore primitives.

    A class body that assigns `name` defines a concrete primitive: `name`
    must be a string and `arity` a non-negative int or None (variadic).
    Both become class constants, and the class is recorded in
    `PrimitiveType.registry`; two primitives cannot share a name.
    Intermediate classes without a `name` are not registered.
    """

    registry: dict[str, type] = {}

    CONSTANTS = ("name", "arity")

    def __new__(meta, cls_name: str, bases: tuple[type, ...], namespace: dict, **kwargs):  # type: ignore
        if "name" in namespace:
            name = namespace["name"]
            arity = namespace.get("arity")
            if not isinstance(name, str) or not name:
                raise TypeError(f"'name' of {cls_name} must be a non-empty string; got {name!r}")
            if arity is not None and (
                isinstance(arity, bool) or not isinstance(arity, int) or arity < 0
            ):
                raise TypeError(f"'arity' of {cls_name} must be a non-negative int or None; got {arity!r}")
            if (known := meta.registry.get(name)) is not None:
                raise TypeError(
                    f"primitive name '{name}' is already used by '{known.__qualname__}'"
                )
            namespace["name"] = class_constant(name)
            namespace["arity"] = class_constant(arity)

        cls = super().__new__(meta, cls_name, bases, namespace, **kwargs)
        if isinstance(cls.__dict__.get("name"), class_constant):
            meta.registry[cls.name] = cls
        return cls

    def __setattr__(cls, attr: str, value: Any) -> None:
        if attr in PrimitiveType.CONSTANTS and cls._frozen(attr):
            raise AttributeError(f"cannot modify '{cls.__name__}.{attr}'")
        super().__setattr__(attr, value)

    def __delattr__(cls, attr: str) -> None:
        if attr in PrimitiveType.CONSTANTS and cls._frozen(attr):
            raise AttributeError(f"cannot delete '{cls.__name__}.{attr}'")
        super().__delattr__(attr)

    def _frozen(cls, attr: str) -> bool:
        return any(isinstance(base.__dict__.get(attr), class_constant) for base in cls.__mro__)
