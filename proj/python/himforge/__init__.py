"""Synthetic helium-ion micrograph generation and particle analysis."""

import json

from . import _core
from ._core import *  # noqa: F401,F403
from ._core import __version__, build_scene as _build_scene, preset_recipe as _preset_recipe


def recipe(name):
    """Built-in recipe as a dict."""
    return json.loads(_preset_recipe(name))


def scene(recipe_dict, seed, lineage=()):
    """Draw one scene from a recipe dict; returns the scene as a dict."""
    return json.loads(_build_scene(json.dumps(recipe_dict), seed, list(lineage)))


def render(scene_spec, workers=1):
    """Render a scene (dict or JSON text); returns (beauty, label_mask, id_map)."""
    if not isinstance(scene_spec, str):
        scene_spec = json.dumps(scene_spec)
    return _core.render(scene_spec, workers)
