"""Python access to the task learning engine.

>>> s = Session()
>>> [e["type"] for e in s.say("Cook an onion.")][-1]
'confirmation_issued'
"""

import json

from . import _core

BadConfig = _core.BadConfig
ScriptError = _core.ScriptError
TranscriptError = _core.TranscriptError

__all__ = ["Session", "run_script", "replay", "bundled_script", "BadConfig", "ScriptError", "TranscriptError"]


def _events(lines):
    return [json.loads(line) for line in lines]


class Session:
    """One dialog session. Config keys match the service's POST /sessions body."""

    def __init__(self, config=None, backend=None):
        self._s = _core.Session(json.dumps(config) if config else "", backend or "")

    def say(self, text):
        return _events(self._s.say(text))

    def approve(self):
        return _events(self._s.approve())

    def correct(self, value=None):
        return _events(self._s.correct(json.dumps(value)))

    def undo(self):
        return _events(self._s.undo())

    @property
    def mode(self):
        return self._s.mode()

    @property
    def pending(self):
        return json.loads(self._s.pending())

    @property
    def knowledge(self):
        return json.loads(self._s.knowledge())

    def knowledge_names(self):
        return [k["name"] for k in self.knowledge]

    @property
    def state(self):
        return json.loads(self._s.state())

    @property
    def metrics(self):
        return json.loads(self._s.metrics())

    @property
    def events(self):
        return _events(self._s.events())

    def world(self):
        return "\n".join(self._s.world())

    def transcript(self):
        return self._s.transcript()


def run_script(script, config=None):
    """Runs script text; returns {ok, failure, line, event_index, metrics, transcript}."""
    return json.loads(_core.run_script(script, json.dumps(config) if config else ""))


def replay(transcript):
    return json.loads(_core.replay(transcript))


def bundled_script():
    return _core.bundled_script()
