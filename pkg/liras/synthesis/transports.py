"""Ways of getting a completion for a prompt.

All synthesis goes through a :py:class:`Transport`. Tests and offline runs
use :py:class:`MockTransport` (scripted responses) or
:py:class:`ReplayTransport` (a recorded attempt log); live runs use
:py:class:`HttpTransport` against a generateContent-style JSON endpoint.

"""
import base64
import logging

from collections import deque
from typing import Callable
from typing import Deque
from typing import Dict
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Union

import requests

from liras.lib import LirasError
from liras.lib.config import ConfigurationError
from liras.synthesis.log import SynthesisAttemptLog


logger = logging.getLogger(__name__)


DEFAULT_ENDPOINT = "https://generativelanguage.googleapis.com/v1beta/models/{model}:generateContent"
DEFAULT_MODEL = "gemini-2.0-flash"
API_KEY_VARIABLE = "LIRAS_API_KEY"


class TransportError(LirasError):
    """The transport could not produce a completion. The request may be retried."""


class UnsupportedCapabilityError(LirasError):
    """The transport cannot serve this kind of request at all."""

    def __init__(self, capability: str):
        super().__init__(f"transport does not support {capability} requests")
        self.capability = capability


class Request(NamedTuple):
    template_id: str
    prompt: str
    temperature: float
    image: Optional[bytes] = None


class Transport:
    supports_vision = False

    def complete(self, request: Request, timeout: Optional[float] = None) -> str:
        """Return the raw text of one completion for ``request``."""
        raise NotImplementedError


Scripted = Union[str, Exception, Callable[[Request], str]]


class MockTransport(Transport):
    """A transport that answers from a script.

    ``responses`` is consumed in order; each item is returned as-is, raised
    if it is an exception, or called with the request if it is callable. A
    single string is returned for every request. Every request is kept in
    :py:attr:`requests` for inspection.

    """

    def __init__(self, responses: Union[str, Sequence[Scripted]], supports_vision: bool = False):
        self.script: Optional[Deque[Scripted]] = None
        self.constant: Optional[str] = None
        if isinstance(responses, str):
            self.constant = responses
        else:
            self.script = deque(responses)
        self.supports_vision = supports_vision
        self.requests: List[Request] = []

    def complete(self, request: Request, timeout: Optional[float] = None) -> str:
        self.requests.append(request)
        if self.constant is not None:
            return self.constant
        assert self.script is not None
        if not self.script:
            raise TransportError("mock transport has no scripted responses left")
        item = self.script.popleft()
        if isinstance(item, Exception):
            raise item
        if callable(item):
            return item(request)
        return item


class ReplayTransport(Transport):
    """Replays the responses recorded in an attempt log, per template, in order.

    A recorded transport failure is raised again as a :py:exc:`TransportError`
    so the replayed loop takes the same path it took when recorded.

    """

    supports_vision = True

    def __init__(self, log: SynthesisAttemptLog):
        self.queues: Dict[str, Deque[Optional[str]]] = {}
        for record in log.records:
            self.queues.setdefault(record.template_id, deque()).append(record.response)

    def complete(self, request: Request, timeout: Optional[float] = None) -> str:
        queue = self.queues.get(request.template_id)
        if not queue:
            raise TransportError(f"no recorded response left for {request.template_id!r}")
        response = queue.popleft()
        if response is None:
            raise TransportError("recorded transport failure")
        return response


class HttpTransport(Transport):
    """Completions from a live model endpoint.

    The API key is required up front: constructing the transport without one
    is a configuration error, raised before any request is made.

    """

    supports_vision = True

    def __init__(
        self,
        api_key: Optional[str],
        endpoint: str = DEFAULT_ENDPOINT,
        model: str = DEFAULT_MODEL,
        session: Optional[requests.Session] = None,
    ):
        if not api_key:
            raise ConfigurationError(
                "synthesis.api_key", f"set {API_KEY_VARIABLE} to use a live endpoint"
            )
        self.api_key = api_key
        self.url = endpoint.format(model=model)
        self.model = model
        self.session = session or requests.Session()

    def _body(self, request: Request) -> dict:
        parts: List[dict] = [{"text": request.prompt}]
        if request.image is not None:
            parts.append(
                {
                    "inline_data": {
                        "mime_type": "image/png",
                        "data": base64.b64encode(request.image).decode("ascii"),
                    }
                }
            )
        return {
            "contents": [{"role": "user", "parts": parts}],
            "generationConfig": {"temperature": request.temperature},
        }

    def complete(self, request: Request, timeout: Optional[float] = None) -> str:
        logger.debug("Requesting a %s completion from %s.", request.template_id, self.model)
        try:
            response = self.session.post(
                self.url,
                json=self._body(request),
                headers={"x-goog-api-key": self.api_key},
                timeout=timeout,
            )
            response.raise_for_status()
            payload = response.json()
        except requests.RequestException as exc:
            logger.warning("Completion request failed: %s", exc)
            raise TransportError(str(exc))
        except ValueError as exc:
            raise TransportError(f"endpoint did not return JSON: {exc}")

        try:
            parts = payload["candidates"][0]["content"]["parts"]
            return "".join(part.get("text", "") for part in parts)
        except (KeyError, IndexError, TypeError, AttributeError):
            raise TransportError("endpoint response has no candidate text")
