#include "structalign/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <string>
#include <utility>

#include "structalign/error.hpp"

namespace structalign {
namespace {

constexpr std::uint32_t kDefaultTempo = 500000;
constexpr std::uint64_t kMaxBeats = std::uint64_t{1} << 22;

// Big-endian cursor over an SMF byte stream, limited to [pos, end).
class SmfCursor {
 public:
  SmfCursor(std::span<const std::uint8_t> data, std::size_t pos, std::size_t end)
      : data_(data), pos_(pos), end_(end) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= end_; }

  std::uint8_t peek() const {
    need(1);
    return data_[pos_];
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint16_t be16() {
    need(2);
    auto v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t be32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::uint32_t varlen() {
    const std::size_t start = pos_;
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7F);
      if ((b & 0x80) == 0) return v;
    }
    throw ParseError(start, "variable-length quantity longer than 4 bytes");
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ > end_ || end_ - pos_ < n) {
      throw ParseError(pos_, "unexpected end of chunk");
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_;
  std::size_t end_;
};

struct RawNote {
  std::uint64_t on_tick;
  std::uint64_t off_tick;
  int pitch;
  int velocity;
  int channel;
  int track;
};

struct TrackResult {
  std::uint64_t end_tick = 0;
};

TrackResult parse_track(SmfCursor& c, int track_index, std::vector<RawNote>& notes,
                        std::vector<TempoChange>& tempos) {
  std::uint64_t tick = 0;
  std::uint8_t running = 0;
  // (channel, pitch) -> FIFO of (onset tick, velocity)
  std::map<std::pair<int, int>, std::deque<std::pair<std::uint64_t, int>>> open;

  while (!c.done()) {
    tick += c.varlen();
    const std::size_t status_pos = c.pos();
    std::uint8_t status = c.peek();
    if (status & 0x80) {
      c.u8();
    } else {
      if (running == 0) throw ParseError(status_pos, "data byte without running status");
      status = running;
    }

    if (status == 0xFF) {
      running = 0;
      const std::uint8_t type = c.u8();
      const std::uint32_t len = c.varlen();
      const std::size_t data_pos = c.pos();
      auto payload = c.take(len);
      if (type == 0x51) {
        if (len != 3) throw ParseError(data_pos, "tempo meta event must carry 3 bytes");
        const std::uint32_t uspq = (std::uint32_t{payload[0]} << 16) |
                                   (std::uint32_t{payload[1]} << 8) | payload[2];
        if (uspq == 0) throw ParseError(data_pos, "zero tempo");
        tempos.push_back({tick, uspq});
      } else if (type == 0x2F) {
        break;
      }
    } else if (status == 0xF0 || status == 0xF7) {
      running = 0;
      c.take(c.varlen());
    } else if (status > 0xF0) {
      throw ParseError(status_pos, "system message inside track chunk");
    } else {
      running = status;
      const int kind = status & 0xF0;
      const int channel = status & 0x0F;
      const int nbytes = (kind == 0xC0 || kind == 0xD0) ? 1 : 2;
      int data[2] = {0, 0};
      for (int i = 0; i < nbytes; ++i) {
        const std::size_t p = c.pos();
        data[i] = c.u8();
        if (data[i] & 0x80) throw ParseError(p, "status byte where data byte expected");
      }
      if (kind == 0x90 && data[1] > 0) {
        open[{channel, data[0]}].emplace_back(tick, data[1]);
      } else if (kind == 0x80 || kind == 0x90) {
        auto it = open.find({channel, data[0]});
        if (it != open.end() && !it->second.empty()) {
          auto [on, vel] = it->second.front();
          it->second.pop_front();
          notes.push_back({on, tick, data[0], vel, channel, track_index});
        }
      }
    }
  }

  TrackResult result;
  result.end_tick = tick;
  // Unmatched note-ons sound until the end of their track.
  for (auto& [key, queue] : open) {
    for (auto [on, vel] : queue) {
      notes.push_back({on, tick, key.second, vel, key.first, track_index});
    }
  }
  return result;
}

void normalize_tempo_map(std::vector<TempoChange>& tempos) {
  std::stable_sort(tempos.begin(), tempos.end(),
                   [](const TempoChange& a, const TempoChange& b) { return a.tick < b.tick; });
  // Last change at a given tick wins.
  std::vector<TempoChange> out;
  for (const auto& t : tempos) {
    if (!out.empty() && out.back().tick == t.tick) {
      out.back() = t;
    } else {
      out.push_back(t);
    }
  }
  if (out.empty() || out.front().tick != 0) {
    out.insert(out.begin(), TempoChange{0, kDefaultTempo});
  }
  tempos = std::move(out);
}

void compute_beats(MidiScore& score) {
  const auto tpq = static_cast<std::uint64_t>(score.ticks_per_quarter);
  score.beat_times.clear();
  for (std::uint64_t t = 0; t <= score.end_tick; t += tpq) {
    score.beat_times.push_back(score.tick_to_seconds(t));
  }
}

void put_varlen(std::vector<std::uint8_t>& out, std::uint64_t v) {
  std::uint8_t buf[10];
  int n = 0;
  buf[n++] = static_cast<std::uint8_t>(v & 0x7F);
  while (v >>= 7) buf[n++] = static_cast<std::uint8_t>((v & 0x7F) | 0x80);
  while (n > 0) out.push_back(buf[--n]);
}

void put_be(std::vector<std::uint8_t>& out, std::uint32_t v, int nbytes) {
  for (int i = nbytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

double MidiScore::tick_to_seconds(std::uint64_t tick) const {
  double seconds = 0.0;
  std::uint64_t prev_tick = 0;
  std::uint32_t tempo = kDefaultTempo;
  for (const auto& change : tempo_map) {
    if (change.tick >= tick) break;
    seconds += static_cast<double>(change.tick - prev_tick) * tempo;
    prev_tick = change.tick;
    tempo = change.microseconds_per_quarter;
  }
  seconds += static_cast<double>(tick - prev_tick) * tempo;
  return seconds / (1e6 * ticks_per_quarter);
}

std::uint64_t MidiScore::seconds_to_tick(double seconds) const {
  if (!(seconds > 0.0)) return 0;
  std::uint64_t seg_tick = 0;
  double seg_seconds = 0.0;
  std::uint32_t tempo = kDefaultTempo;
  for (const auto& change : tempo_map) {
    const double at = tick_to_seconds(change.tick);
    if (at > seconds) break;
    seg_tick = change.tick;
    seg_seconds = at;
    tempo = change.microseconds_per_quarter;
  }
  const double ticks = (seconds - seg_seconds) * 1e6 / tempo * ticks_per_quarter;
  return seg_tick + static_cast<std::uint64_t>(std::llround(ticks));
}

double MidiScore::duration_seconds() const {
  double end = end_seconds();
  for (const auto& n : notes) end = std::max(end, n.onset_seconds + n.duration_seconds);
  return end;
}

MidiScore parse_midi(std::span<const std::uint8_t> bytes) {
  SmfCursor head(bytes, 0, bytes.size());
  auto magic = head.take(4);
  if (!std::equal(magic.begin(), magic.end(), "MThd")) {
    throw ParseError(0, "missing MThd header chunk");
  }
  const std::uint32_t header_len = head.be32();
  if (header_len < 6) throw ParseError(4, "header chunk shorter than 6 bytes");
  const std::size_t fields_pos = head.pos();
  const std::uint16_t format = head.be16();
  const std::uint16_t ntracks = head.be16();
  const std::size_t division_pos = head.pos();
  const std::uint16_t division = head.be16();
  if (format > 1) {
    throw ParseError(fields_pos, "unsupported SMF format " + std::to_string(format));
  }
  if (division & 0x8000) throw ParseError(division_pos, "SMPTE time division not supported");
  if (division == 0) throw ParseError(division_pos, "zero ticks per quarter note");
  if (bytes.size() - fields_pos < header_len) {
    throw ParseError(fields_pos, "truncated header chunk");
  }

  MidiScore score;
  score.ticks_per_quarter = division;
  score.num_tracks = ntracks;

  std::vector<RawNote> raw;
  std::size_t pos = fields_pos + header_len;
  int found = 0;
  while (found < ntracks) {
    SmfCursor chunk(bytes, pos, bytes.size());
    if (chunk.done()) {
      throw ParseError(pos, "expected " + std::to_string(ntracks) + " track chunks, found " +
                                std::to_string(found));
    }
    auto id = chunk.take(4);
    const std::uint32_t len = chunk.be32();
    const std::size_t body = chunk.pos();
    if (bytes.size() - body < len) throw ParseError(pos, "truncated chunk");
    if (std::equal(id.begin(), id.end(), "MTrk")) {
      SmfCursor track(bytes, body, body + len);
      auto result = parse_track(track, found, raw, score.tempo_map);
      score.end_tick = std::max(score.end_tick, result.end_tick);
      ++found;
    }
    pos = body + len;
  }

  normalize_tempo_map(score.tempo_map);
  if (score.end_tick / division >= kMaxBeats) {
    throw ParseError(pos, "implausible track length");
  }

  for (const auto& n : raw) {
    const double on = score.tick_to_seconds(n.on_tick);
    const double off = score.tick_to_seconds(n.off_tick);
    if (off > on) {
      score.notes.push_back({on, off - on, n.pitch, n.velocity, n.channel, n.track});
    }
  }
  std::stable_sort(score.notes.begin(), score.notes.end(), [](const Note& a, const Note& b) {
    if (a.onset_seconds != b.onset_seconds) return a.onset_seconds < b.onset_seconds;
    if (a.pitch != b.pitch) return a.pitch < b.pitch;
    return a.track < b.track;
  });
  compute_beats(score);
  return score;
}

void finalize_score(MidiScore& score) {
  if (score.ticks_per_quarter <= 0) throw ArgumentError("ticks_per_quarter must be positive");
  normalize_tempo_map(score.tempo_map);
  for (const auto& n : score.notes) {
    score.end_tick = std::max(score.end_tick, score.seconds_to_tick(n.onset_seconds + n.duration_seconds));
    score.num_tracks = std::max(score.num_tracks, n.track + 1);
  }
  std::stable_sort(score.notes.begin(), score.notes.end(), [](const Note& a, const Note& b) {
    if (a.onset_seconds != b.onset_seconds) return a.onset_seconds < b.onset_seconds;
    if (a.pitch != b.pitch) return a.pitch < b.pitch;
    return a.track < b.track;
  });
  compute_beats(score);
}

std::vector<std::uint8_t> write_midi(const MidiScore& score) {
  MidiScore timing = score;
  normalize_tempo_map(timing.tempo_map);

  int num_tracks = std::max(1, score.num_tracks);
  for (const auto& n : score.notes) num_tracks = std::max(num_tracks, n.track + 1);

  struct Event {
    std::uint64_t tick;
    int order;  // tempo, note-off, note-on
    std::vector<std::uint8_t> bytes;
  };
  std::vector<std::vector<Event>> tracks(num_tracks);
  for (const auto& t : timing.tempo_map) {
    tracks[0].push_back({t.tick, 0,
                         {0xFF, 0x51, 0x03, static_cast<std::uint8_t>(t.microseconds_per_quarter >> 16),
                          static_cast<std::uint8_t>(t.microseconds_per_quarter >> 8),
                          static_cast<std::uint8_t>(t.microseconds_per_quarter)}});
  }
  std::uint64_t end_tick = score.end_tick;
  for (const auto& t : timing.tempo_map) end_tick = std::max(end_tick, t.tick);
  for (const auto& n : score.notes) {
    if (n.pitch < 0 || n.pitch > 127 || n.velocity < 1 || n.velocity > 127) {
      throw ArgumentError("note pitch/velocity out of MIDI range");
    }
    const std::uint64_t on = timing.seconds_to_tick(n.onset_seconds);
    std::uint64_t off = timing.seconds_to_tick(n.onset_seconds + n.duration_seconds);
    if (off <= on) off = on + 1;
    const auto ch = static_cast<std::uint8_t>(n.channel & 0x0F);
    tracks[n.track].push_back({on, 2, {static_cast<std::uint8_t>(0x90 | ch),
                                       static_cast<std::uint8_t>(n.pitch),
                                       static_cast<std::uint8_t>(n.velocity)}});
    tracks[n.track].push_back({off, 1, {static_cast<std::uint8_t>(0x80 | ch),
                                        static_cast<std::uint8_t>(n.pitch), 0}});
    end_tick = std::max(end_tick, off);
  }

  std::vector<std::uint8_t> out = {'M', 'T', 'h', 'd'};
  put_be(out, 6, 4);
  put_be(out, 1, 2);
  put_be(out, static_cast<std::uint32_t>(num_tracks), 2);
  put_be(out, static_cast<std::uint32_t>(score.ticks_per_quarter), 2);

  for (auto& events : tracks) {
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
    });
    std::vector<std::uint8_t> body;
    std::uint64_t tick = 0;
    for (const auto& e : events) {
      put_varlen(body, e.tick - tick);
      tick = e.tick;
      body.insert(body.end(), e.bytes.begin(), e.bytes.end());
    }
    put_varlen(body, end_tick - tick);
    body.insert(body.end(), {0xFF, 0x2F, 0x00});

    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    put_be(out, static_cast<std::uint32_t>(body.size()), 4);
    out.insert(out.end(), body.begin(), body.end());
  }
  return out;
}

PianoRoll midi_to_piano_roll(const MidiScore& score, double frame_rate_hz) {
  if (!(frame_rate_hz > 0.0) || !std::isfinite(frame_rate_hz)) {
    throw ArgumentError("frame rate must be positive");
  }
  constexpr double kTol = 1e-9;
  const auto num_frames =
      static_cast<Eigen::Index>(std::ceil(score.duration_seconds() * frame_rate_hz - kTol));
  PianoRoll roll;
  roll.frame_rate_hz = frame_rate_hz;
  roll.frames = RowMatrix::Zero(std::max<Eigen::Index>(num_frames, 0), 128);

  for (const auto& n : score.notes) {
    const double activation = n.velocity / 127.0;
    const double on = n.onset_seconds * frame_rate_hz;
    const double off = (n.onset_seconds + n.duration_seconds) * frame_rate_hz;
    // Frame f covers [f, f+1) in frame units; the note sounds in frames
    // that overlap [on, off).
    auto first = static_cast<Eigen::Index>(std::floor(on + kTol));
    auto last = static_cast<Eigen::Index>(std::ceil(off - kTol)) - 1;
    first = std::max<Eigen::Index>(first, 0);
    last = std::min<Eigen::Index>(last, roll.frames.rows() - 1);
    for (Eigen::Index f = first; f <= last; ++f) {
      double& cell = roll.frames(f, n.pitch);
      cell = std::max(cell, activation);
    }
  }
  return roll;
}

AudioClip read_wav(std::span<const std::uint8_t> bytes) {
  auto le16 = [&](std::size_t p) {
    return static_cast<std::uint16_t>(bytes[p] | (bytes[p + 1] << 8));
  };
  auto le32 = [&](std::size_t p) {
    return std::uint32_t{bytes[p]} | (std::uint32_t{bytes[p + 1]} << 8) |
           (std::uint32_t{bytes[p + 2]} << 16) | (std::uint32_t{bytes[p + 3]} << 24);
  };
  if (bytes.size() < 12 || !std::equal(bytes.begin(), bytes.begin() + 4, "RIFF") ||
      !std::equal(bytes.begin() + 8, bytes.begin() + 12, "WAVE")) {
    throw ParseError(0, "not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  int channels = 0;
  int bits = 0;
  AudioClip clip;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = le32(pos + 4);
    const std::size_t body = pos + 8;
    if (bytes.size() - body < len) throw ParseError(pos, "truncated WAV chunk");
    if (std::equal(bytes.begin() + pos, bytes.begin() + pos + 4, "fmt ")) {
      if (len < 16) throw ParseError(pos, "fmt chunk too short");
      std::uint16_t format = le16(body);
      channels = le16(body + 2);
      clip.sample_rate_hz = static_cast<int>(le32(body + 4));
      bits = le16(body + 14);
      if (format == 0xFFFE && len >= 40) format = le16(body + 24);
      if (format != 1) {
        throw UnsupportedFormatError("WAV format tag " + std::to_string(format) +
                                     " is not PCM");
      }
      if (bits != 16) {
        throw UnsupportedFormatError("WAV bit depth " + std::to_string(bits) +
                                     " unsupported (16 only)");
      }
      if (channels != 1 && channels != 2) {
        throw UnsupportedFormatError("WAV with " + std::to_string(channels) + " channels");
      }
      if (clip.sample_rate_hz <= 0) throw ParseError(body + 4, "non-positive sample rate");
      have_fmt = true;
    } else if (std::equal(bytes.begin() + pos, bytes.begin() + pos + 4, "data")) {
      if (!have_fmt) throw ParseError(pos, "data chunk before fmt chunk");
      const std::size_t frame_bytes = 2 * static_cast<std::size_t>(channels);
      const std::size_t frames = len / frame_bytes;
      clip.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        const std::size_t p = body + i * frame_bytes;
        double sum = 0.0;
        for (int ch = 0; ch < channels; ++ch) {
          sum += static_cast<std::int16_t>(le16(p + 2 * ch));
        }
        clip.samples[i] = static_cast<float>(sum / channels / 32768.0);
      }
      return clip;
    }
    pos = body + len + (len & 1);
  }
  throw ParseError(pos, "no data chunk");
}

std::vector<std::uint8_t> write_wav(const AudioClip& clip) {
  std::vector<std::uint8_t> out;
  auto put16 = [&](std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  auto put32 = [&](std::uint32_t v) {
    put16(v & 0xFFFF);
    put16(v >> 16);
  };
  const auto data_len = static_cast<std::uint32_t>(clip.samples.size() * 2);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(16);
  put16(1);
  put16(1);
  put32(static_cast<std::uint32_t>(clip.sample_rate_hz));
  put32(static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  put16(2);
  put16(16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(data_len);
  for (float s : clip.samples) {
    const double scaled = std::clamp(std::round(static_cast<double>(s) * 32768.0), -32768.0, 32767.0);
    put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

}  // namespace structalign
