"""HLS media/master playlist parsing and emission, including the two
buffer-control extension tags, and the join operation that collapses a
multi-variant stream into a schedule-driven single-variant playlist.

The extension tags are backwards compatible: players ignore tags they do not
recognize. `#EXT-X-BUFFERSIZE:<n>` tells a cooperating player how many
segments to hold buffered; `#EXT-X-REFRESH:<n>` tells it to re-fetch the
playlist every n seconds so both values can track the schedule. Input accepts
an optional space after the tag colon; emission is always canonical
(unspaced, LF line endings, fixed tag order).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

from .core import Schedule, buffer_timeline


class PlaylistParseError(ValueError):
    """Input text is not an acceptable playlist."""


class PlaylistJoinError(ValueError):
    """Master, variants, and schedule do not fit together."""


@dataclass(frozen=True)
class MediaEntry:
    duration_seconds: float
    uri: str
    title: str = ""


@dataclass(frozen=True)
class MediaPlaylist:
    """A single-variant playlist: header tags plus (duration, URI) entries."""

    target_duration_seconds: int
    entries: tuple[MediaEntry, ...]
    version: int | None = 3
    buffer_size: int | None = None
    refresh_seconds: int | None = None
    end_list: bool = False
    unknown_tags: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.target_duration_seconds < 0:
            raise ValueError("target duration must be >= 0")
        for opt in (self.buffer_size, self.refresh_seconds):
            if opt is not None and opt < 0:
                raise ValueError("extension tag values are natural numbers including 0")
        if self.end_list and not self.entries:
            raise ValueError("a playlist with an end marker must have entries")
        for e in self.entries:
            if e.duration_seconds > self.target_duration_seconds:
                raise ValueError(
                    f"entry duration {e.duration_seconds} exceeds target "
                    f"duration {self.target_duration_seconds}"
                )


@dataclass(frozen=True)
class MasterPlaylist:
    """Variant list of a multi-variant stream: (advertised bandwidth, URI) pairs."""

    variants: tuple[tuple[int, str], ...]

    def __post_init__(self) -> None:
        if not self.variants:
            raise ValueError("master playlist needs at least one variant")
        bws = [b for b, _ in self.variants]
        if len(set(bws)) != len(bws):
            raise ValueError(f"variant bandwidths must be unique, got {bws}")
        if any(b <= 0 for b in bws):
            raise ValueError("variant bandwidths must be > 0")

    def by_ascending_bandwidth(self) -> tuple[tuple[int, str], ...]:
        """Variants sorted by bandwidth; index in this order is the quality index."""
        return tuple(sorted(self.variants))


_TAG_INT = re.compile(r"^#(?P<name>EXT-X-[A-Z-]+): ?(?P<value>\S+)$")
_STREAM_INF_BANDWIDTH = re.compile(r"(?:^|,)BANDWIDTH=(\d+)(?:,|$)")

_INT_TAGS = {
    "EXT-X-VERSION",
    "EXT-X-TARGETDURATION",
    "EXT-X-BUFFERSIZE",
    "EXT-X-REFRESH",
}


def _lines(text: str) -> list[str]:
    return [ln.rstrip("\r") for ln in text.split("\n")]


def _int_value(line: str, lineno: int) -> tuple[str, int]:
    m = _TAG_INT.match(line)
    if not m:
        raise PlaylistParseError(f"line {lineno}: malformed tag {line!r}")
    try:
        return m.group("name"), int(m.group("value"))
    except ValueError:
        raise PlaylistParseError(
            f"line {lineno}: tag {m.group('name')} needs an integer value, "
            f"got {m.group('value')!r}"
        ) from None


def parse_media_playlist(text: str) -> MediaPlaylist:
    """Parse a single-variant playlist; unrecognized tags are kept verbatim."""
    lines = _lines(text)
    if not lines or lines[0].strip() != "#EXTM3U":
        raise PlaylistParseError("playlist must start with #EXTM3U")

    version: int | None = None
    target: int | None = None
    buffer_size: int | None = None
    refresh: int | None = None
    end_list = False
    entries: list[MediaEntry] = []
    unknown: list[str] = []

    i = 1
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line.startswith("#EXTINF"):
            head, _, title = line.partition(",")
            _, _, value = head.partition(":")
            try:
                duration = float(value)
            except ValueError:
                raise PlaylistParseError(f"line {i}: bad EXTINF duration {value!r}") from None
            while i < len(lines) and not lines[i].strip():
                i += 1
            if i >= len(lines) or lines[i].strip().startswith("#"):
                raise PlaylistParseError(f"line {i}: #EXTINF without a following URI")
            entries.append(MediaEntry(duration, lines[i].strip(), title))
            i += 1
        elif line == "#EXT-X-ENDLIST":
            end_list = True
        elif (m := _TAG_INT.match(line)) and m.group("name") in _INT_TAGS:
            name, value = _int_value(line, i)
            if name == "EXT-X-VERSION":
                version = value
            elif name == "EXT-X-TARGETDURATION":
                target = value
            elif name == "EXT-X-BUFFERSIZE":
                buffer_size = value
            else:
                refresh = value
        else:
            unknown.append(line)  # players ignore these; keep them round-trippable

    if target is None:
        raise PlaylistParseError("missing #EXT-X-TARGETDURATION")
    try:
        return MediaPlaylist(
            target_duration_seconds=target,
            entries=tuple(entries),
            version=version,
            buffer_size=buffer_size,
            refresh_seconds=refresh,
            end_list=end_list,
            unknown_tags=tuple(unknown),
        )
    except ValueError as exc:
        raise PlaylistParseError(str(exc)) from None


def parse_master_playlist(text: str) -> MasterPlaylist:
    """Parse a master playlist into (bandwidth, URI) variants."""
    lines = _lines(text)
    if not lines or lines[0].strip() != "#EXTM3U":
        raise PlaylistParseError("playlist must start with #EXTM3U")
    variants: list[tuple[int, str]] = []
    i = 1
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line.startswith("#EXT-X-STREAM-INF"):
            continue
        _, _, attrs = line.partition(":")
        m = _STREAM_INF_BANDWIDTH.search(attrs)
        if not m:
            raise PlaylistParseError(f"line {i}: STREAM-INF without a BANDWIDTH attribute")
        while i < len(lines) and not lines[i].strip():
            i += 1
        if i >= len(lines) or lines[i].strip().startswith("#"):
            raise PlaylistParseError(f"line {i}: STREAM-INF without a following URI")
        variants.append((int(m.group(1)), lines[i].strip()))
        i += 1
    try:
        return MasterPlaylist(tuple(variants))
    except ValueError as exc:
        raise PlaylistParseError(str(exc)) from None


def _format_duration(d: float) -> str:
    return str(int(d)) if float(d).is_integer() else repr(float(d))


def emit_media_playlist(playlist: MediaPlaylist) -> str:
    """Canonical emission: fixed tag order, no space after colons, LF endings."""
    out = ["#EXTM3U"]
    if playlist.version is not None:
        out.append(f"#EXT-X-VERSION:{playlist.version}")
    out.append(f"#EXT-X-TARGETDURATION:{playlist.target_duration_seconds}")
    if playlist.buffer_size is not None:
        out.append(f"#EXT-X-BUFFERSIZE:{playlist.buffer_size}")
    if playlist.refresh_seconds is not None:
        out.append(f"#EXT-X-REFRESH:{playlist.refresh_seconds}")
    out.extend(playlist.unknown_tags)
    for entry in playlist.entries:
        out.append(f"#EXTINF:{_format_duration(entry.duration_seconds)},{entry.title}")
        out.append(entry.uri)
    if playlist.end_list:
        out.append("#EXT-X-ENDLIST")
    return "\n".join(out) + "\n"


def buffer_size_for_slot(schedule: Schedule, user: int, slot: int) -> int:
    """Segments the player should hold at the end of a slot under the schedule."""
    if not 0 <= slot < schedule.num_slots:
        raise ValueError(f"slot {slot} outside [0, {schedule.num_slots})")
    return buffer_timeline(schedule, user)[slot]


def join_playlists(
    master: MasterPlaylist,
    variant_playlists: Mapping[str, MediaPlaylist],
    schedule: Schedule,
    user: int,
    current_slot: int,
    refresh_seconds: int,
) -> MediaPlaylist:
    """Build the single-variant playlist a scheduled player should see.

    Entry i takes its URI from the variant whose ascending-bandwidth rank
    equals the scheduled quality index of segment i. The buffer tag carries
    the schedule's end-of-slot buffer fill for `current_slot`; the refresh
    tag is passed through (one segment duration is the sensible choice).
    """
    ordered = master.by_ascending_bandwidth()
    try:
        playlists = [variant_playlists[uri] for _, uri in ordered]
    except KeyError as exc:
        raise PlaylistJoinError(f"no playlist supplied for variant {exc.args[0]!r}") from None

    counts = {len(p.entries) for p in playlists}
    if len(counts) != 1:
        raise PlaylistJoinError(f"variant entry counts differ: {sorted(counts)}")
    n_entries = counts.pop()
    base = playlists[0]
    for p in playlists[1:]:
        for a, b in zip(base.entries, p.entries):
            if a.duration_seconds != b.duration_seconds:
                raise PlaylistJoinError("variant entry durations differ")

    if not 0 <= user < schedule.num_users:
        raise PlaylistJoinError(f"user {user} outside [0, {schedule.num_users})")
    quality = schedule.quality[user]
    if len(quality) != n_entries:
        raise PlaylistJoinError(
            f"schedule covers {len(quality)} segments but playlists have {n_entries} entries"
        )
    if any(p < 0 or p >= len(ordered) for p in quality):
        raise PlaylistJoinError(
            f"schedule uses quality indices outside the {len(ordered)} master variants"
        )

    entries = tuple(
        MediaEntry(
            base.entries[i].duration_seconds,
            playlists[int(quality[i])].entries[i].uri,
            base.entries[i].title,
        )
        for i in range(n_entries)
    )
    return MediaPlaylist(
        target_duration_seconds=base.target_duration_seconds,
        entries=entries,
        version=base.version,
        buffer_size=buffer_size_for_slot(schedule, user, current_slot),
        refresh_seconds=refresh_seconds,
        end_list=base.end_list,
    )
