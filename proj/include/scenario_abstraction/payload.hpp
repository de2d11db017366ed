// Copyright 2026 The scenario_abstraction Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary envelope for abstracted tracks. Layout is documented in docs/wire_format.md.

#ifndef SCENARIO_ABSTRACTION__PAYLOAD_HPP_
#define SCENARIO_ABSTRACTION__PAYLOAD_HPP_

#include "scenario_abstraction/errors.hpp"
#include "scenario_abstraction/quantfit.hpp"
#include "scenario_abstraction/segmentation.hpp"

#include <boost/crc.hpp>
#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace scenario_abstraction
{

inline constexpr std::uint8_t payload_magic[4] = {'S', 'C', 'B', '1'};
inline constexpr std::uint8_t payload_version = 1;

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes)
{
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

namespace detail
{

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class ByteWriter
{
public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }

  void str(const std::string & s, const char * what)
  {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ValidationError(fmt::format("payload: {} longer than 65535 bytes", what));
    }
    u16(static_cast<std::uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }

  std::vector<std::uint8_t> & bytes() { return out_; }

private:
  template<class U>
  void le(U v)
  {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }

  std::vector<std::uint8_t> out_;
};

class ByteReader
{
public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le<std::uint8_t>("u8")); }
  std::uint16_t u16() { return le<std::uint16_t>("u16"); }
  std::uint32_t u32() { return le<std::uint32_t>("u32"); }
  std::int32_t i32() { return static_cast<std::int32_t>(le<std::uint32_t>("i32")); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>("f64")); }

  std::string str(const char * what)
  {
    const std::size_t n = u16();
    need(n, what);
    std::string s(reinterpret_cast<const char *>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

  void need(std::size_t n, const char * what) const
  {
    if (remaining() < n) {
      throw PayloadError(
        PayloadError::Kind::truncated,
        fmt::format(
          "payload truncated at byte {} reading {}: {} byte(s) missing", pos_, what, n - remaining()));
    }
  }

private:
  template<class U>
  U le(const char * what)
  {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v = static_cast<U>(v | static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i)));
    }
    pos_ += sizeof(U);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_{0};
};

inline std::uint8_t action_tag(const Action & a)
{
  return static_cast<std::uint8_t>(
    (static_cast<unsigned>(a.channel) << 4) | static_cast<unsigned>(a.kind));
}

[[noreturn]] inline void malformed(const std::string & what)
{
  throw PayloadError(PayloadError::Kind::malformed, "payload malformed: " + what);
}

inline void encode_action(ByteWriter & w, const FittedAction & fa)
{
  const Action & a = fa.action;
  w.u8(action_tag(a));
  w.f64(a.t_start);
  w.f64(a.duration());
  w.i32(a.lane_before);
  w.i32(a.lane_after);
  if (is_lane_change(a.kind)) {
    w.f64(a.crossing_time.value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  if (fa.segments.size() > std::numeric_limits<std::uint8_t>::max()) {
    throw ValidationError("payload: too many segments in one action");
  }
  w.u8(static_cast<std::uint8_t>(fa.segments.size()));
  for (const auto & seg : fa.segments) {
    if (seg.degree < 0 || seg.degree > max_poly_degree) {
      throw ValidationError(fmt::format("payload: segment degree {} outside [0, 5]", seg.degree));
    }
    const auto count = static_cast<std::size_t>(seg.degree + 1);
    w.u8(static_cast<std::uint8_t>(count));
    for (std::size_t k = poly_coefficient_count - count; k < poly_coefficient_count; ++k) {
      w.f64(seg.a[k]);
    }
  }
}

struct DecodedAction
{
  Action action;
  double duration;
  std::vector<std::array<double, poly_coefficient_count>> coeffs;
  std::vector<int> degrees;
};

inline DecodedAction decode_action(ByteReader & r, const std::string & vehicle_id)
{
  DecodedAction d;
  const std::uint8_t tag = r.u8();
  const unsigned channel = tag >> 4;
  const unsigned kind = tag & 0x0Fu;
  if (channel > 1 || kind >= all_action_kinds.size()) {
    malformed(fmt::format("invalid action tag 0x{:02x}", tag));
  }
  Action & a = d.action;
  a.vehicle_id = vehicle_id;
  a.channel = static_cast<Channel>(channel);
  a.kind = all_action_kinds[kind];
  if (channel_of(a.kind) != a.channel) {
    malformed(fmt::format("action tag 0x{:02x} mixes channel and kind", tag));
  }
  a.t_start = r.f64();
  d.duration = r.f64();
  a.lane_before = r.i32();
  a.lane_after = r.i32();
  if (is_lane_change(a.kind)) {
    a.crossing_time = r.f64();
  }
  const std::size_t segments = r.u8();
  const std::size_t expected = is_lane_change(a.kind) ? 2 : 1;
  if (segments != expected) {
    malformed(fmt::format("{} action carries {} segments, expected {}", to_string(a.kind), segments, expected));
  }
  for (std::size_t s = 0; s < segments; ++s) {
    const std::size_t count = r.u8();
    if (count < 1 || count > poly_coefficient_count) {
      malformed(fmt::format("coefficient count {} outside [1, 6]", count));
    }
    std::array<double, poly_coefficient_count> c{};
    for (std::size_t k = poly_coefficient_count - count; k < poly_coefficient_count; ++k) {
      c[k] = r.f64();
    }
    d.coeffs.push_back(c);
    d.degrees.push_back(static_cast<int>(count) - 1);
  }
  return d;
}

inline bool finite_all(std::initializer_list<double> values)
{
  for (double v : values) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return true;
}

/// Restores t_end from the successor's start (or the span end) and rebuilds the fitted
/// segments with their derived durations.
inline void assemble_channel(
  std::vector<DecodedAction> & decoded, double t0, double t1, SignalKind signal,
  std::vector<Action> & actions, std::vector<FittedAction> & fits)
{
  if (decoded.empty()) {
    malformed("channel without actions");
  }
  if (decoded.front().action.t_start != t0) {
    malformed("first action does not start at the span start");
  }
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    Action & a = decoded[i].action;
    a.t_end = i + 1 < decoded.size() ? decoded[i + 1].action.t_start : t1;
    const double scale = std::max({1.0, std::abs(a.t_start), std::abs(a.t_end)});
    if (
      !finite_all({a.t_start, a.t_end, decoded[i].duration}) || !(a.t_end >= a.t_start) ||
      std::abs(a.t_start + decoded[i].duration - a.t_end) > 1e-9 * scale) {
      malformed(fmt::format("action {} of '{}' does not tile the span", i, a.vehicle_id));
    }
    FittedAction fa;
    fa.action = a;
    fa.signal = signal;
    if (decoded[i].coeffs.size() == 2) {
      const double crossing = a.crossing_time.value_or(std::numeric_limits<double>::quiet_NaN());
      if (!(crossing > a.t_start && crossing < a.t_end)) {
        malformed(fmt::format("lane change crossing time outside action {} of '{}'", i, a.vehicle_id));
      }
      fa.segments.push_back({decoded[i].coeffs[0], crossing - a.t_start, decoded[i].degrees[0]});
      fa.segments.push_back({decoded[i].coeffs[1], a.t_end - crossing, decoded[i].degrees[1]});
    } else {
      fa.segments.push_back({decoded[i].coeffs[0], a.duration(), decoded[i].degrees[0]});
    }
    actions.push_back(a);
    fits.push_back(std::move(fa));
  }
}

}  // namespace detail

/// Deterministic little-endian encoding followed by a CRC-32 trailer. Fit diagnostics
/// (constraint records, residuals) are not transmitted.
inline std::vector<std::uint8_t> encode(
  const std::vector<AbstractedTrack> & tracks, const std::string & recording_id)
{
  detail::ByteWriter w;
  for (auto b : payload_magic) {
    w.u8(b);
  }
  w.u8(payload_version);
  w.str(recording_id, "recording_id");
  if (tracks.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ValidationError("payload: more than 65535 tracks");
  }
  w.u16(static_cast<std::uint16_t>(tracks.size()));
  for (const auto & tr : tracks) {
    w.str(tr.vehicle_id, "vehicle_id");
    w.u8(tr.role == Role::ego ? 0 : 1);
    w.f64(tr.initial_state.s);
    w.f64(tr.initial_state.t);
    w.i32(tr.initial_state.lane_id);
    w.f64(tr.initial_state.road_s);
    w.f64(tr.timeline.t0);
    w.f64(tr.timeline.t1);
    const std::size_t n_actions = tr.lateral_fits.size() + tr.longitudinal_fits.size();
    if (n_actions > std::numeric_limits<std::uint16_t>::max()) {
      throw ValidationError(fmt::format("payload: track '{}' has too many actions", tr.vehicle_id));
    }
    w.u16(static_cast<std::uint16_t>(tr.lateral_fits.size()));
    w.u16(static_cast<std::uint16_t>(tr.longitudinal_fits.size()));
    for (const auto & fa : tr.lateral_fits) {
      detail::encode_action(w, fa);
    }
    for (const auto & fa : tr.longitudinal_fits) {
      detail::encode_action(w, fa);
    }
  }
  const std::uint32_t crc = crc32(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

struct DecodedPayload
{
  std::string recording_id;
  std::vector<AbstractedTrack> tracks;
};

/// Accepts arbitrary bytes; every failure is a PayloadError.
inline DecodedPayload decode(std::span<const std::uint8_t> bytes)
{
  detail::ByteReader r(bytes);
  for (std::size_t i = 0; i < 4; ++i) {
    if (i < bytes.size() && bytes[i] != payload_magic[i]) {
      throw PayloadError(PayloadError::Kind::bad_magic, "payload: bad magic, expected 'SCB1'");
    }
  }
  r.need(4, "magic");
  for (int i = 0; i < 4; ++i) {
    r.u8();
  }
  const std::uint8_t version = r.u8();
  if (version != payload_version) {
    throw PayloadError(
      PayloadError::Kind::unknown_version,
      fmt::format("payload: unknown version {} (supported: {})", version, payload_version));
  }
  DecodedPayload out;
  out.recording_id = r.str("recording_id");
  const std::size_t n_tracks = r.u16();
  for (std::size_t ti = 0; ti < n_tracks; ++ti) {
    AbstractedTrack tr;
    tr.vehicle_id = r.str("vehicle_id");
    const std::uint8_t role = r.u8();
    if (role > 1) {
      detail::malformed(fmt::format("role byte {} of '{}'", role, tr.vehicle_id));
    }
    tr.role = role == 0 ? Role::ego : Role::other;
    tr.initial_state.s = r.f64();
    tr.initial_state.t = r.f64();
    tr.initial_state.lane_id = r.i32();
    tr.initial_state.road_s = r.f64();
    tr.timeline.vehicle_id = tr.vehicle_id;
    tr.timeline.t0 = r.f64();
    tr.timeline.t1 = r.f64();
    if (!detail::finite_all({tr.timeline.t0, tr.timeline.t1}) || tr.timeline.t1 < tr.timeline.t0) {
      detail::malformed(fmt::format("invalid span of '{}'", tr.vehicle_id));
    }
    const std::size_t n_lat = r.u16();
    const std::size_t n_lon = r.u16();
    std::vector<detail::DecodedAction> lat;
    std::vector<detail::DecodedAction> lon;
    for (std::size_t i = 0; i < n_lat + n_lon; ++i) {
      auto d = detail::decode_action(r, tr.vehicle_id);
      const Channel want = i < n_lat ? Channel::lateral : Channel::longitudinal;
      if (d.action.channel != want) {
        detail::malformed(fmt::format("action {} of '{}' is on the wrong channel", i, tr.vehicle_id));
      }
      (i < n_lat ? lat : lon).push_back(std::move(d));
    }
    detail::assemble_channel(
      lat, tr.timeline.t0, tr.timeline.t1, SignalKind::t_offset, tr.timeline.lateral, tr.lateral_fits);
    detail::assemble_channel(
      lon, tr.timeline.t0, tr.timeline.t1, SignalKind::s_velocity, tr.timeline.longitudinal,
      tr.longitudinal_fits);
    out.tracks.push_back(std::move(tr));
  }
  const std::size_t body = r.position();
  const std::uint32_t found = r.u32();
  const std::uint32_t expected = crc32(bytes.first(body));
  if (found != expected) {
    throw PayloadError(
      PayloadError::Kind::crc_mismatch,
      fmt::format("payload: crc mismatch, expected 0x{:08x}, found 0x{:08x}", expected, found));
  }
  if (r.remaining() != 0) {
    detail::malformed(fmt::format("{} trailing byte(s) after the checksum", r.remaining()));
  }
  return out;
}

inline DecodedPayload decode(const std::vector<std::uint8_t> & bytes)
{
  return decode(std::span<const std::uint8_t>(bytes.data(), bytes.size()));
}

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__PAYLOAD_HPP_
