"""Interactive serving: JSON control plane, binary frame data plane.

A session owns one render pipeline. Control messages mutate a latest-wins
state snapshot (rapid camera updates between renders collapse to the
newest), a render task draws dirty states, and a writer task streams the
frame/stats pairs through a bounded drop-oldest outbox so a slow client
can never stall rendering. The session loop is transport-agnostic; a thin
FastAPI websocket adapter wires it to the network.
"""
from __future__ import annotations

import asyncio
import io
import json
import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np
from fastapi import FastAPI, WebSocket

from .errors import EncodeError, ProtocolError, VisionaryError
from .generators import GeneratorInputs, PoseParams
from .pipeline import (ModelInstance, Scene, image_to_rgba8, render_frame,
                       parse_filter_token)
from .scene import orbit_camera
from .sortlab import GlobalSort, count_inversions, parse_strategy

FRAME_TAG = 0x02
_HEADER = struct.Struct("<BHHBI")
MAX_FRAME_PAYLOAD = 64 * 1024 * 1024

ENCODINGS = {"raw-rgba8": 0, "png": 1}
_ENCODING_NAMES = {v: k for k, v in ENCODINGS.items()}


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------

def encode_frame_payload(img: np.ndarray, encoding: str) -> bytes:
    rgba = image_to_rgba8(img) if img.dtype != np.uint8 else img
    if encoding == "raw-rgba8":
        return rgba.tobytes()
    if encoding == "png":
        from PIL import Image
        buf = io.BytesIO()
        Image.fromarray(rgba, mode="RGBA").save(buf, format="PNG")
        return buf.getvalue()
    raise EncodeError(f"unsupported frame encoding {encoding!r}")


def encode_frame_message(img: np.ndarray, encoding: str = "raw-rgba8") -> bytes:
    """Frame bytes: tag 0x02, u16 width, u16 height, u8 encoding id,
    u32 payload length, payload; little-endian throughout."""
    if encoding not in ENCODINGS:
        raise EncodeError(f"unsupported frame encoding {encoding!r}")
    height, width = img.shape[:2]
    if width > 0xFFFF or height > 0xFFFF:
        raise EncodeError(f"frame {width}x{height} exceeds u16 dimensions")
    payload = encode_frame_payload(img, encoding)
    if len(payload) > MAX_FRAME_PAYLOAD:
        raise EncodeError(f"frame payload {len(payload)} bytes exceeds 64 MiB")
    return _HEADER.pack(FRAME_TAG, width, height,
                        ENCODINGS[encoding], len(payload)) + payload


def decode_frame_message(data: bytes):
    """(width, height, encoding, payload) from frame bytes."""
    if len(data) < _HEADER.size:
        raise ProtocolError("frame message shorter than its header")
    tag, width, height, enc_id, length = _HEADER.unpack_from(data)
    if tag != FRAME_TAG:
        raise ProtocolError(f"unexpected message tag 0x{tag:02x}")
    if enc_id not in _ENCODING_NAMES:
        raise ProtocolError(f"unknown encoding id {enc_id}")
    payload = data[_HEADER.size:]
    if len(payload) != length:
        raise ProtocolError(f"payload length {len(payload)} != header {length}")
    encoding = _ENCODING_NAMES[enc_id]
    if encoding == "raw-rgba8" and length != width * height * 4:
        raise ProtocolError("raw-rgba8 payload does not match dimensions")
    return width, height, encoding, payload


def _finite(value, name: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ProtocolError(f"{name} is not a number")
    if not math.isfinite(v):
        raise ProtocolError(f"{name} is not finite")
    return v


def _finite_vec(value, name: str, n: int) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (n,) or not np.all(np.isfinite(arr)):
        raise ProtocolError(f"{name} must be {n} finite numbers")
    return arr


CONTROL_TYPES = ("hello", "camera", "set_time", "set_pose", "set_strategy",
                 "set_model_transform", "set_filter_chain")


def parse_control(text: str) -> dict:
    """Validate one JSON control message; returns the normalized dict."""
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"control message is not valid JSON: {e}")
    if not isinstance(msg, dict) or "type" not in msg:
        raise ProtocolError("control message needs a 'type' field")
    kind = msg["type"]
    if kind not in CONTROL_TYPES:
        raise ProtocolError(f"unknown control type {kind!r}")
    if kind == "hello":
        return {"type": "hello"}
    if kind == "camera":
        out = {"type": "camera"}
        for key in ("yaw", "pitch", "radius", "fov"):
            if key in msg:
                out[key] = _finite(msg[key], key)
        if "radius" in out and out["radius"] <= 0:
            raise ProtocolError("radius must be positive")
        if "fov" in out and not 0 < out["fov"] < math.pi:
            raise ProtocolError("fov must lie in (0, pi)")
        if "target" in msg:
            out["target"] = _finite_vec(msg["target"], "target", 3)
        return out
    if kind == "set_time":
        t = _finite(msg.get("t"), "t")
        if not 0.0 <= t <= 1.0:
            raise ProtocolError("t must lie in [0, 1]")
        return {"type": kind, "t": t}
    if kind == "set_pose":
        rot = np.asarray(msg.get("joint_rotations"), dtype=np.float64)
        if rot.ndim != 2 or rot.shape[1] != 4 or not np.all(np.isfinite(rot)):
            raise ProtocolError("joint_rotations must be a (K,4) finite array")
        trans = _finite_vec(msg.get("root_translation", (0, 0, 0)),
                            "root_translation", 3)
        return {"type": kind, "pose": PoseParams(rot, trans)}
    if kind == "set_strategy":
        token = msg.get("token")
        try:
            strategy = parse_strategy(token)
        except VisionaryError as e:
            raise ProtocolError(str(e))
        return {"type": kind, "token": token, "strategy": strategy}
    if kind == "set_model_transform":
        try:
            model_id = int(msg["model_id"])
        except (KeyError, TypeError, ValueError):
            raise ProtocolError("set_model_transform needs an integer model_id")
        t = np.asarray(msg.get("transform"), dtype=np.float64)
        if t.size != 16 or not np.all(np.isfinite(t)):
            raise ProtocolError("transform must hold 16 finite numbers")
        return {"type": kind, "model_id": model_id, "transform": t.reshape(4, 4)}
    # set_filter_chain
    tokens = msg.get("tokens")
    if not isinstance(tokens, list):
        raise ProtocolError("set_filter_chain needs a 'tokens' list")
    try:
        filters = [parse_filter_token(tok) for tok in tokens]
    except VisionaryError as e:
        raise ProtocolError(str(e))
    return {"type": kind, "filters": filters}


# ---------------------------------------------------------------------------
# Session state and render step
# ---------------------------------------------------------------------------

@dataclass
class ViewerConfig:
    width: int = 512
    height: int = 512
    encoding: str = "raw-rgba8"
    outbox_size: int = 4
    autoplay_fps: float = 0.0     # > 0: auto-advance time for 4D scenes


@dataclass
class SessionState:
    """Latest-wins control snapshot; the render task consumes the newest."""
    yaw: float = 0.0
    pitch: float = 0.0
    radius: float = 3.0
    target: np.ndarray = field(default_factory=lambda: np.zeros(3))
    fov: float = math.radians(60.0)
    time: float = 0.0
    pose: PoseParams | None = None
    strategy: object = field(default_factory=GlobalSort)
    strategy_token: str = "global"
    model_transforms: dict = field(default_factory=dict)
    filters: tuple = ()
    frame_index: int = 0

    def apply(self, msg: dict) -> None:
        kind = msg["type"]
        if kind == "camera":
            for key in ("yaw", "pitch", "radius", "fov", "target"):
                if key in msg:
                    setattr(self, key, msg[key])
        elif kind == "set_time":
            self.time = msg["t"]
        elif kind == "set_pose":
            self.pose = msg["pose"]
        elif kind == "set_strategy":
            self.strategy = msg["strategy"]
            self.strategy_token = msg["token"]
        elif kind == "set_model_transform":
            self.model_transforms[msg["model_id"]] = msg["transform"]
        elif kind == "set_filter_chain":
            self.filters = tuple(msg["filters"])


def scene_info(scene: Scene) -> dict:
    models = []
    for inst in scene.instances:
        src = inst.source
        count = None
        degree = None
        for probe in (src, getattr(src, "cloud", None),
                      getattr(getattr(src, "rig", None), "canonical", None),
                      getattr(getattr(src, "field", None), "canonical", None)):
            if probe is None:
                continue
            if hasattr(probe, "count"):
                count, degree = int(probe.count), int(probe.degree)
                break
            try:
                count, degree = len(probe), int(probe.degree)
                break
            except TypeError:
                continue
        models.append({"model_id": inst.model_id, "count": count,
                       "degree": degree, "kind": type(src).__name__})
    return {"type": "scene_info", "models": models,
            "has_mesh": scene.mesh is not None,
            "background": list(scene.background)}


def render_state(scene: Scene, state: SessionState, config: ViewerConfig):
    """Render one frame for a state snapshot; returns (FrameResult, stats dict)."""
    cam = orbit_camera(state.yaw, state.pitch, state.radius, state.target,
                       state.fov, width=config.width, height=config.height)
    if state.model_transforms:
        instances = [
            replace(inst, transform=state.model_transforms.get(
                inst.model_id, inst.transform))
            for inst in scene.instances]
        scene = Scene(instances=instances, mesh=scene.mesh,
                      background=scene.background)
    inputs = GeneratorInputs(frame_index=state.frame_index, time=state.time,
                             camera_position=cam.position,
                             view_dir=cam.forward, pose=state.pose)
    result = render_frame(scene, cam, inputs, state.strategy, state.filters)
    inversions = 0 if isinstance(state.strategy, GlobalSort) \
        else count_inversions(result.permutation, result.keys)
    stats = {"type": "stats", "frame_index": state.frame_index,
             "strategy": state.strategy_token, "inversions": int(inversions),
             **result.stats.to_dict()}
    return result, stats


# ---------------------------------------------------------------------------
# Transport-agnostic session loop
# ---------------------------------------------------------------------------

class _Outbox:
    """Bounded frame outbox: drop-oldest so rendering never blocks."""

    def __init__(self, size: int):
        self._queue: asyncio.Queue = asyncio.Queue(maxsize=max(1, size))

    def put(self, item) -> None:
        while True:
            try:
                self._queue.put_nowait(item)
                return
            except asyncio.QueueFull:
                try:
                    self._queue.get_nowait()
                except asyncio.QueueEmpty:
                    pass

    async def get(self):
        return await self._queue.get()


async def session_loop(scene: Scene, connection,
                       config: ViewerConfig | None = None) -> None:
    """Drive one viewer session over a connection object.

    The connection must provide `await receive() -> str | None` (None on
    disconnect), `await send_text(str)` and `await send_bytes(bytes)`.
    Handshake: the first message must be hello; the reply is scene_info.
    Afterwards control messages update the latest-wins state; every render
    emits one binary frame immediately followed by its stats message. A
    malformed message sends a fatal error and ends the session; a render
    failure sends a non-fatal error and the session continues.
    """
    config = config or ViewerConfig()
    state = SessionState()
    dirty = asyncio.Event()
    outbox = _Outbox(config.outbox_size)
    closed = asyncio.Event()

    first = await connection.receive()
    if first is None:
        return
    try:
        if parse_control(first)["type"] != "hello":
            raise ProtocolError("expected hello handshake")
    except ProtocolError as e:
        await connection.send_text(json.dumps(
            {"type": "error", "fatal": True, "message": str(e)}))
        return
    await connection.send_text(json.dumps(scene_info(scene)))
    dirty.set()       # draw an initial frame at the default state

    async def reader():
        while not closed.is_set():
            text = await connection.receive()
            if text is None:
                closed.set()
                dirty.set()
                return
            try:
                msg = parse_control(text)
            except ProtocolError as e:
                outbox.put(("error", json.dumps(
                    {"type": "error", "fatal": True, "message": str(e)})))
                closed.set()
                dirty.set()
                return
            if msg["type"] != "hello":
                state.apply(msg)
            dirty.set()

    async def renderer():
        loop = asyncio.get_running_loop()
        while not closed.is_set():
            if config.autoplay_fps > 0:
                try:
                    await asyncio.wait_for(dirty.wait(),
                                           timeout=1.0 / config.autoplay_fps)
                except asyncio.TimeoutError:
                    state.time = (state.time + 1.0 / (config.autoplay_fps * 10)) % 1.0
            else:
                await dirty.wait()
            dirty.clear()
            if closed.is_set():
                return
            try:
                result, stats = await loop.run_in_executor(
                    None, render_state, scene, state, config)
                frame = encode_frame_message(result.image, config.encoding)
            except VisionaryError as e:
                outbox.put(("error", json.dumps(
                    {"type": "error", "fatal": False, "message": str(e)})))
                continue
            outbox.put(("frame", frame, json.dumps(stats)))
            state.frame_index += 1

    async def writer():
        while True:
            item = await outbox.get()
            if item[0] == "error":
                await connection.send_text(item[1])
                if json.loads(item[1]).get("fatal"):
                    closed.set()
                    dirty.set()
                    return
            else:
                await connection.send_bytes(item[1])
                await connection.send_text(item[2])

    tasks = [asyncio.ensure_future(t()) for t in (reader, renderer, writer)]
    await closed.wait()
    # Let the writer flush anything already queued before tearing down.
    await asyncio.sleep(0)
    for t in tasks:
        t.cancel()
    await asyncio.gather(*tasks, return_exceptions=True)


# ---------------------------------------------------------------------------
# FastAPI / websocket wiring
# ---------------------------------------------------------------------------

class _WebSocketConnection:
    """Adapts a FastAPI WebSocket to the session connection protocol."""

    def __init__(self, websocket):
        self._ws = websocket

    async def receive(self):
        try:
            return await self._ws.receive_text()
        except Exception:
            return None

    async def send_text(self, text: str):
        await self._ws.send_text(text)

    async def send_bytes(self, data: bytes):
        await self._ws.send_bytes(data)


def create_app(scene: Scene, config: ViewerConfig | None = None):
    """FastAPI app exposing the session protocol at /ws."""
    config = config or ViewerConfig()
    app = FastAPI(title="visionary viewer")

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "models": len(scene.instances)}

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        try:
            await session_loop(scene, _WebSocketConnection(websocket), config)
        finally:
            try:
                await websocket.close()
            except Exception:
                pass

    return app


def serve(scene: Scene, host: str = "127.0.0.1", port: int = 8765,
          config: ViewerConfig | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(scene, config), host=host, port=port,
                log_level="warning")
