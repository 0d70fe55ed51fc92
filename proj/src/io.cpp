#include "holeburn/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace holeburn {

namespace csv {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_field(std::string_view field, bool optional, std::size_t line_no, std::string_view column) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  if (field.empty()) {
    if (optional) return 0.0;
    throw ValidationError("line " + std::to_string(line_no) + ": missing value for '" + std::string(column) + "'");
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ValidationError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "' in column '" +
                          std::string(column) + "'");
  return v;
}

// Calls row(fields, line_no) for every data line after checking the header.
template <class Fn>
void for_each_row(std::string_view text, std::string_view header, std::size_t columns, Fn&& row) {
  std::size_t pos = 0, line_no = 0;
  bool seen_header = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != header)
        throw ValidationError("expected CSV header '" + std::string(header) + "', found '" + std::string(line) + "'");
      seen_header = true;
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != columns)
      throw ValidationError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) + " fields, found " +
                            std::to_string(fields.size()));
    row(fields, line_no);
  }
  if (!seen_header) throw ValidationError("empty CSV: expected header '" + std::string(header) + "'");
}

}  // namespace

std::string to_csv(const ReflectionTrace& t) {
  std::string out(kTraceHeader);
  out += '\n';
  for (std::size_t i = 0; i < t.frequencies_hz.size(); ++i)
    out += format_double(t.frequencies_hz[i]) + ',' + format_double(t.s11[i].real()) + ',' +
           format_double(t.s11[i].imag()) + '\n';
  return out;
}

std::string to_csv(const SaturationCurve& c) {
  std::string out(kSaturationHeader);
  out += '\n';
  for (const auto& r : c.rows)
    out += format_double(r.n) + ',' + format_double(r.q_int) + ',' + format_double(r.q_int_err) + '\n';
  return out;
}

std::string to_csv(const TwoToneMap& m) {
  std::string out(kTwoToneHeader);
  out += '\n';
  for (const auto& r : m.rows)
    out += format_double(r.delta_hz) + ',' + format_double(r.n_pump) + ',' + format_double(r.inv_q_tls) + ',' +
           format_double(r.inv_q_tls_err) + ',' + format_double(r.dfreq_hz) + ',' + format_double(r.dfreq_err) + '\n';
  return out;
}

ReflectionTrace parse_trace(std::string_view text) {
  ReflectionTrace t;
  for_each_row(text, kTraceHeader, 3, [&](const auto& f, std::size_t ln) {
    t.frequencies_hz.push_back(parse_field(f[0], false, ln, "freq_hz"));
    t.s11.emplace_back(parse_field(f[1], false, ln, "re_s11"), parse_field(f[2], false, ln, "im_s11"));
  });
  validate(t);
  return t;
}

SaturationCurve parse_saturation(std::string_view text) {
  SaturationCurve c;
  for_each_row(text, kSaturationHeader, 3, [&](const auto& f, std::size_t ln) {
    c.rows.push_back({parse_field(f[0], false, ln, "n"), parse_field(f[1], false, ln, "q_int"),
                      parse_field(f[2], true, ln, "q_int_err")});
  });
  validate(c);
  return c;
}

TwoToneMap parse_twotone(std::string_view text) {
  TwoToneMap m;
  for_each_row(text, kTwoToneHeader, 6, [&](const auto& f, std::size_t ln) {
    m.rows.push_back({parse_field(f[0], false, ln, "delta_hz"), parse_field(f[1], false, ln, "n_pump"),
                      parse_field(f[2], false, ln, "inv_q_tls"), parse_field(f[3], true, ln, "inv_q_tls_err"),
                      parse_field(f[4], false, ln, "dfreq_hz"), parse_field(f[5], true, ln, "dfreq_err")});
  });
  validate(m);
  return m;
}

Kind detect(std::string_view text) {
  auto end = text.find('\n');
  std::string_view first = text.substr(0, end);
  if (!first.empty() && first.back() == '\r') first.remove_suffix(1);
  if (first == kTraceHeader) return Kind::Trace;
  if (first == kSaturationHeader) return Kind::Saturation;
  if (first == kTwoToneHeader) return Kind::TwoTone;
  return Kind::Unknown;
}

}  // namespace csv

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("error while writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

std::string fingerprint(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace holeburn
