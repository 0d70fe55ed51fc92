#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "holeburn/errors.hpp"
#include "holeburn/resonator.hpp"
#include "holeburn/synth.hpp"

namespace holeburn {

class IoError : public Error {
 public:
  using Error::Error;
};

namespace csv {

inline constexpr std::string_view kTraceHeader = "freq_hz,re_s11,im_s11";
inline constexpr std::string_view kSaturationHeader = "n,q_int,q_int_err";
inline constexpr std::string_view kTwoToneHeader = "delta_hz,n_pump,inv_q_tls,inv_q_tls_err,dfreq_hz,dfreq_err";

enum class Kind { Trace, Saturation, TwoTone, Unknown };

// 17 significant digits, so a write-read-write cycle is byte-identical.
std::string format_double(double x);

std::string to_csv(const ReflectionTrace& t);
std::string to_csv(const SaturationCurve& c);
std::string to_csv(const TwoToneMap& m);

// Parsers throw ValidationError on header or field mismatch. Empty error fields read as 0.
ReflectionTrace parse_trace(std::string_view text);
SaturationCurve parse_saturation(std::string_view text);
TwoToneMap parse_twotone(std::string_view text);

Kind detect(std::string_view text);

}  // namespace csv

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// FNV-1a 64-bit digest, hex encoded; used to tie fit results to their input data.
std::string fingerprint(std::string_view bytes);

}  // namespace holeburn
