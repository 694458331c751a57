__all__ = ['MessageKind', 'Message', 'COORDINATOR', 'Transport', 'MemoryTransport',
           'JsonLinesTransport']

import collections
import dataclasses
import enum
import json
import logging
import threading

import numpy as np

from fogopt.exceptions import TransportError

logger = logging.getLogger(__name__)

COORDINATOR = "wfc"


class MessageKind(enum.Enum):
    SERVICE_VECTOR = "service_vector"
    DUAL_BROADCAST = "dual_broadcast"
    PSI_SLICE = "psi_slice"
    ARRIVAL_RATE = "arrival_rate"
    TERMINATE = "terminate"


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclasses.dataclass(frozen=True)
class Message(object):
    """ One protocol message. Agents are addressed by node index, the
        coordinator by COORDINATOR.
    """
    sender: object
    receiver: object
    kind: MessageKind
    payload: dict
    iteration: int

    def to_dict(self):
        return {
            "iter": self.iteration,
            "from": _plain(self.sender),
            "to": _plain(self.receiver),
            "kind": self.kind.value,
            "payload": {k: _plain(v) for k, v in self.payload.items()},
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["from"], data["to"], MessageKind(data["kind"]),
                   dict(data["payload"]), data["iter"])


class Transport():
    """
    An abstraction layer for moving protocol messages between the fog node
    agents and the coordinator.

    Custom extensions of this class must implement send and receive with
    the same input and output structure as the Transport class, deliver
    reliably and keep per-sender order.
    """

    def send(self, message):
        """
        Queue `message` for its receiver.
        """
        raise NotImplementedError()

    def receive(self, recipient):
        """
        Pop and return the oldest message waiting for `recipient`.
        Raises TransportError when there is none.
        """
        raise NotImplementedError()

    @property
    def transcript(self):
        """
        Every message sent so far, in send order.
        """
        raise NotImplementedError()

    def close(self):
        pass


class MemoryTransport(Transport):
    """
    In-process transport: one ordered queue per recipient, safe to use from
    several threads.
    """

    def __init__(self):
        self._queues = collections.defaultdict(collections.deque)
        self._lock = threading.Lock()
        self._transcript = []

    def send(self, message):
        with self._lock:
            self._queues[message.receiver].append(message)
            self._transcript.append(message)

    def receive(self, recipient):
        with self._lock:
            queue = self._queues.get(recipient)
            if not queue:
                raise TransportError("no message waiting for {0!r}".format(recipient),
                                     transcript=list(self._transcript))
            return queue.popleft()

    def pending(self, recipient):
        with self._lock:
            return len(self._queues.get(recipient, ()))

    @property
    def transcript(self):
        with self._lock:
            return list(self._transcript)


class JsonLinesTransport(MemoryTransport):
    """
    Memory transport that also appends every message to a JSON lines file
    with fields iter, from, to, kind and payload.
    """

    def __init__(self, path):
        """
        Parameters:
             * path: file the messages are appended to; it is truncated
                     when the transport is created
        """
        super(JsonLinesTransport, self).__init__()
        self.path = path
        try:
            self._file = open(path, "w", encoding="utf-8")
        except IOError as error:
            raise TransportError("couldn't open transcript at {0}: {1}".format(path, error))

    def send(self, message):
        super(JsonLinesTransport, self).send(message)
        try:
            with self._lock:
                self._file.write(json.dumps(message.to_dict(), sort_keys=True) + "\n")
        except (IOError, ValueError) as error:
            logger.warning("Couldn't write message to transcript at: %s", self.path)
            raise TransportError("transcript write failed: {0}".format(error),
                                 transcript=self.transcript)

    def close(self):
        if not self._file.closed:
            self._file.close()
