#pragma once

// Standard MIDI File and PCM WAV input.

#include <cstdint>
#include <span>
#include <vector>

#include "structalign/matrix.hpp"

namespace structalign {

// 22050 Hz / 512-sample hop: symbolic and audio chroma share this time base.
inline constexpr double kDefaultFrameRate = 22050.0 / 512.0;

struct Note {
  double onset_seconds = 0.0;
  double duration_seconds = 0.0;
  int pitch = 0;     // 0..127
  int velocity = 0;  // 1..127
  int channel = 0;
  int track = 0;
};

struct TempoChange {
  std::uint64_t tick = 0;
  std::uint32_t microseconds_per_quarter = 500000;
};

struct MidiScore {
  std::vector<Note> notes;  // sorted by onset, then pitch
  std::vector<TempoChange> tempo_map;  // sorted, first entry at tick 0
  int ticks_per_quarter = 480;
  int num_tracks = 1;
  std::uint64_t end_tick = 0;
  std::vector<double> beat_times;  // one per quarter note in [0, end_tick]

  double tick_to_seconds(std::uint64_t tick) const;
  // Inverse of tick_to_seconds, rounded to the nearest tick.
  std::uint64_t seconds_to_tick(double seconds) const;
  double end_seconds() const { return tick_to_seconds(end_tick); }
  // Latest note release, or end_seconds() if that is later.
  double duration_seconds() const;
};

// Throws ParseError (with byte offset) for malformed input, including
// format 2 and SMPTE time division.
MidiScore parse_midi(std::span<const std::uint8_t> bytes);

// Format-1 SMF: tempo events live in track 0, each note in the chunk given by
// its `track` field. Onsets are quantized to the nearest tick.
std::vector<std::uint8_t> write_midi(const MidiScore& score);

// Recomputes tempo_map defaults, end_tick and beat_times after notes have been
// edited programmatically.
void finalize_score(MidiScore& score);

struct PianoRoll {
  RowMatrix frames;  // [num_frames x 128], velocity / 127
  double frame_rate_hz = kDefaultFrameRate;

  Eigen::Index num_frames() const { return frames.rows(); }
};

PianoRoll midi_to_piano_roll(const MidiScore& score,
                             double frame_rate_hz = kDefaultFrameRate);

struct AudioClip {
  std::vector<float> samples;  // mono, [-1, 1]
  int sample_rate_hz = 22050;
};

// RIFF/WAVE PCM16 mono or stereo (stereo averaged).
AudioClip read_wav(std::span<const std::uint8_t> bytes);
// Mono PCM16 writer, mostly for fixtures.
std::vector<std::uint8_t> write_wav(const AudioClip& clip);

}  // namespace structalign
