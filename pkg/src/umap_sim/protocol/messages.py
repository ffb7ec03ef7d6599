"""Message payload schemas (canonical JSON).

Payloads are UTF-8 JSON with sorted keys and no whitespace, so identical
message content always serializes to identical bytes. u64 values that do not
fit a JavaScript double (digests, RNG state) travel as strings.

Schemas (request -> response):

  Hello        {}                      -> {proto, server, frame_index|null}
  Configure    {task, map?, seed, time?{decision_interval,frame_rate,dilation},
                options?{send_observations,trace_dir}}
                                       -> {ok, task, n_agents, agents:[{id,team,kind,n_actions}], map}
  Reset        {seed?}                 -> state body (see below, rewards/events empty)
  StepRequest  {actions:{"<agent_id>": int}}
                                       -> state body
  Shutdown     {stop_server?}          -> {ok}
  ErrorReport  (response only)         {error}

State body: {snapshot, obs?, rewards:{"<id>": float}, events:[...], done, digest}.
"""

from __future__ import annotations

import json
from typing import Any

from ..events import Event


def canonical_json(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode("utf-8")


def parse_json(payload: bytes) -> Any:
    return json.loads(payload.decode("utf-8"))


def state_body(world, observations=None, rewards=None, events=(), done=False) -> dict:
    body = {
        "snapshot": world.snapshot(),
        "rewards": {str(aid): r for aid, r in (rewards or {}).items()},
        "events": [e.to_json() for e in events],
        "done": done,
        "digest": world.hexdigest,
    }
    if observations is not None:
        body["obs"] = {str(aid): vec for aid, vec in observations.items()}
    return body


def actions_from_wire(obj: dict) -> dict[int, int]:
    return {int(aid): int(action) for aid, action in obj.items()}


def actions_to_wire(actions: dict[int, int]) -> dict[str, int]:
    return {str(aid): int(action) for aid, action in actions.items()}


def events_from_wire(items: list) -> list[Event]:
    return [Event.from_json(item) for item in items]
