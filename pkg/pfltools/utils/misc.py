#  Copyright 2024 pfltools maintainers
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

import typing as tp

import numpy as np
from typeguard import TypeCheckError, check_type

AnyType = tp.Any

_INT_KEY = 0
_NEGATIVE_INT_KEY = 1
_TEXT_KEY = 2


def is_instance(obj: tp.Any, types: tp.Union[AnyType, tp.Tuple[AnyType, ...]]) -> bool:
    """
    Check `obj` against one or several types, generics included.

    Used to validate values read from configuration files, where ``isinstance``
    cannot check e.g. ``List[float]``.

    Parameters
    ----------
    obj : any
        Value to check.
    types : any | tuple(any, ...)
        Type or tuple of alternative types.

    Returns
    -------
    bool
        Whether `obj` matches at least one of `types`.

    Examples
    --------
    >>> from typing import List, Union

    >>> is_instance([0.1, 1], List[Union[int, float]])
    True
    >>> is_instance("0.1", float)
    False
    """
    if not isinstance(types, tuple):
        types = (types,)
    for type_ in types:
        try:
            check_type(obj, type_)
        except TypeCheckError:
            continue
        return True
    return False


def derive_seed(seed: int, *keys: tp.Hashable) -> int:
    """
    Derive a child seed from a base seed and any number of hashable keys.

    Keys become the spawn key of ``np.random.SeedSequence(seed)``: integers are taken as they are,
    other keys by the UTF-8 bytes of their string form, every key prefixed with its kind.
    The result does not depend on Python hash randomization, so the same
    `(seed, keys)` always produce the same child seed.

    Parameters
    ----------
    seed : int
        Nonnegative base seed of any size.
    keys : hashable
        Keys identifying the child stream, e.g. client id or replication index.

    Returns
    -------
    int
        Child seed in ``[0, 2**63)``.

    Raises
    ------
    ValueError
        If `seed` is negative.

    Examples
    --------
    >>> derive_seed(1, "client_1") == derive_seed(1, "client_1")
    True
    >>> derive_seed(1, "client_1") == derive_seed(1, "client_2")
    False
    >>> derive_seed(1, 5) == derive_seed(1, "5")
    False
    """
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"Seed must be nonnegative, got {seed}")
    spawn_key: tp.List[int] = []
    for key in keys:
        spawn_key.extend(_key_words(key))
    state = np.random.SeedSequence(seed, spawn_key=spawn_key).generate_state(1, dtype=np.uint64)
    return int(state[0]) >> 1


def _key_words(key: tp.Hashable) -> tp.List[int]:
    if isinstance(key, (int, np.integer)):
        value = int(key)
        return [_INT_KEY, value] if value >= 0 else [_NEGATIVE_INT_KEY, -value]
    data = str(key).encode("utf-8")
    return [_TEXT_KEY, len(data), *data]
