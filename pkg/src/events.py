"""
Event ingestion: plain and syslog streams, the three-first-words event type,
the event alphabet, and sliding-window extraction.
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import config
from src.errors import ConfigError, InputError

logger = logging.getLogger(__name__)

# "Jan 10 08:01:02 host proc[pid]: description"
SYSLOG_PATTERN = re.compile(
    r"^(?P<timestamp>\w{3}\s+\d{1,2} \d{2}:\d{2}:\d{2}) "
    r"(?P<hostname>\S+) "
    r"(?P<process>[^\s\[\]:]+)(?:\[(?P<pid>\d+)\])?"
    r":(?: (?P<message>.*))?$"
)
QUALIFYING_WORD = re.compile(
    rf"[A-Za-z]{{{config.SYSLOG_MIN_WORD_LENGTH},}}"
)


@dataclass(frozen=True)
class EventAlphabet:
    """Event types in first-appearance order; a type's code is its position."""

    symbols: tuple
    _codes: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if not symbols:
            raise InputError("empty series")
        codes = {symbol: code for code, symbol in enumerate(symbols)}
        if len(codes) != len(symbols):
            raise InputError("alphabet symbols must be unique")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "_codes", codes)

    @classmethod
    def from_events(cls, events):
        return cls(tuple(dict.fromkeys(events)))

    @property
    def size(self):
        return len(self.symbols)

    def encode(self, symbol):
        try:
            return self._codes[symbol]
        except KeyError:
            raise InputError(f"unknown event type {symbol!r}") from None

    def decode(self, code):
        if not 0 <= code < self.size:
            raise InputError(f"code {code} outside alphabet of size {self.size}")
        return self.symbols[code]


@dataclass(frozen=True, eq=False)
class EventSeries:
    codes: np.ndarray
    alphabet: EventAlphabet

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        if codes.ndim != 1 or codes.size == 0:
            raise InputError("empty series")
        if codes.min() < 0 or codes.max() >= self.alphabet.size:
            raise InputError("series code outside the alphabet")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)

    def __len__(self):
        return int(self.codes.size)

    @classmethod
    def from_events(cls, events):
        events = list(events)
        if not events:
            raise InputError("empty series")
        alphabet = EventAlphabet.from_events(events)
        return cls(np.array([alphabet.encode(e) for e in events]), alphabet)

    def decoded(self):
        return [self.alphabet.symbols[c] for c in self.codes]


@dataclass(frozen=True, eq=False)
class Window:
    """Window k (1-based) covering series positions start .. start+n-1 (1-based)."""

    index: int
    start: int
    codes: np.ndarray

    @property
    def window_id(self):
        """0-based id used in every artifact and label file."""
        return self.index - 1

    def __len__(self):
        return int(len(self.codes))


# --- Syslog tokenizing ---

def parse_syslog_line(line):
    """Split a syslog record into its header fields and description, or None."""
    match = SYSLOG_PATTERN.match(line.rstrip("\r\n"))
    if not match:
        return None
    fields = match.groupdict()
    fields["message"] = fields["message"] or ""
    return fields


def event_type_from_description(description):
    """
    Join the first three qualifying words of a description.

    A word qualifies when it is at least three characters long and consists of
    ASCII letters only; tokens containing any other character are skipped whole.
    """
    words = []
    for token in description.split():
        if QUALIFYING_WORD.fullmatch(token):
            words.append(token)
            if len(words) == config.SYSLOG_WORDS_PER_EVENT:
                break
    return " ".join(words) if words else config.EMPTY_EVENT


def tokenize_syslog_line(line):
    """
    Event type of one syslog line (the "three first words" feature).

    Examples:
        "Jan 10 08:01:02 host dhclient[991]: DHCPREQUEST of 10.0.0.2 on eth0"
            -> "DHCPREQUEST"
        "garbage" -> "<unparsed>"
    """
    fields = parse_syslog_line(line)
    if fields is None:
        return config.UNPARSED_EVENT
    return event_type_from_description(fields["message"])


# --- Ingestion ---

def ingest(lines, mode="plain", app_filter=None):
    """
    Build an EventSeries from a text stream.

    plain: every nonempty line is one event type, taken verbatim (minus the line break).
    syslog: every line is reduced to its three-first-words event type; with
    app_filter only lines whose process name (the tag before "[") matches are kept.
    """
    if mode not in config.INPUT_FORMATS:
        raise ConfigError(f"unknown input format {mode!r}")

    events = []
    skipped = 0
    for line in lines:
        if mode == "plain":
            event = line.rstrip("\r\n")
            if event.strip():
                events.append(event)
            continue

        if not line.strip():
            continue
        fields = parse_syslog_line(line)
        if app_filter is not None:
            if fields is None or fields["process"] != app_filter:
                skipped += 1
                continue
        if fields is None:
            events.append(config.UNPARSED_EVENT)
        else:
            events.append(event_type_from_description(fields["message"]))

    if skipped:
        logger.debug(f"Skipped {skipped} lines not matching app {app_filter!r}")
    series = EventSeries.from_events(events)
    logger.info(
        f"Ingested {len(series)} events, {series.alphabet.size} event types ({mode})"
    )
    return series


def read_events(path, mode="plain", app_filter=None):
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return ingest(f, mode=mode, app_filter=app_filter)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e


# --- Windowing ---

def default_shift(window_size):
    return max(window_size // 2, 1)


def window_count(total, window_size, shift):
    """Number of complete windows: floor((N + m - n) / m)."""
    return (total + shift - window_size) // shift


def extract_windows(series, window_size, shift=None):
    """
    Slide a window of window_size over the series with the given shift.

    Window k (1-based) covers positions (k-1)*shift+1 .. (k-1)*shift+window_size;
    an incomplete trailing window is dropped.
    """
    if shift is None:
        shift = default_shift(window_size)
    if window_size < 1 or shift < 1:
        raise ConfigError("window size and shift must be at least 1")
    total = len(series)
    if window_size > total:
        raise InputError("window longer than series")

    windows = []
    for k in range(1, window_count(total, window_size, shift) + 1):
        offset = (k - 1) * shift
        windows.append(Window(
            index=k,
            start=offset + 1,
            codes=series.codes[offset:offset + window_size],
        ))
    logger.info(
        f"Extracted {len(windows)} windows (n={window_size}, shift={shift}, N={total})"
    )
    return windows
