// Copyright 2026 the lidaraug authors
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

#ifndef LIDARAUG__IO_HPP_
#define LIDARAUG__IO_HPP_

#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lidaraug/augment.hpp"
#include "lidaraug/policy.hpp"
#include "lidaraug/range_image.hpp"
#include "lidaraug/types.hpp"

namespace lidaraug {

// Plain-text, line-oriented file formats. All floating-point values are
// written with 17 significant digits, which round-trips every IEEE double
// exactly, so serialize -> parse is the identity on valid data. Parsing is
// strict: wrong token counts, malformed numbers and violated invariants are
// errors, reported as "<source>:<line>: <message>".

// -------------------------------------------------------------------------
// scalar formatting

inline std::string format_double(double value)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace detail {

[[noreturn]] inline void parse_fail(
  std::string_view source, int line, const std::string & message)
{
  throw std::runtime_error(
    std::string(source) + ":" + std::to_string(line) + ": " + message);
}

inline std::vector<std::string_view> split_tokens(std::string_view line)
{
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
      ++i;
    }
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
      ++i;
    }
    if (i > start) {
      tokens.push_back(line.substr(start, i - start));
    }
  }
  return tokens;
}

inline std::optional<double> try_parse_double(std::string_view token)
{
  double value = 0.0;
  const char * end = token.data() + token.size();
  const auto result = std::from_chars(token.data(), end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<std::int64_t> try_parse_int(std::string_view token)
{
  std::int64_t value = 0;
  const char * end = token.data() + token.size();
  const auto result = std::from_chars(token.data(), end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<std::uint64_t> try_parse_uint(std::string_view token)
{
  std::uint64_t value = 0;
  const char * end = token.data() + token.size();
  const auto result = std::from_chars(token.data(), end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    return std::nullopt;
  }
  return value;
}

// Sequential line reader tracking 1-based line numbers for error messages.
class LineReader
{
public:
  LineReader(std::string_view text, std::string_view source) : text_(text), source_(source) {}

  // Next line, without its terminator; nullopt at end of input.
  std::optional<std::string_view> next()
  {
    if (pos_ >= text_.size()) {
      return std::nullopt;
    }
    const std::size_t start = pos_;
    std::size_t end = text_.find('\n', start);
    if (end == std::string_view::npos) {
      end = text_.size();
      pos_ = end;
    } else {
      pos_ = end + 1;
    }
    ++line_;
    std::string_view line = text_.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    return line;
  }

  std::string_view required(const std::string & what)
  {
    const auto line = next();
    if (!line) {
      fail("unexpected end of file, expected " + what);
    }
    return *line;
  }

  // Everything after the last expected line must be blank.
  void expect_end()
  {
    while (const auto line = next()) {
      if (!split_tokens(*line).empty()) {
        fail("unexpected trailing content");
      }
    }
  }

  [[noreturn]] void fail(const std::string & message) const
  {
    parse_fail(source_, line_, message);
  }

  double as_double(std::string_view token) const
  {
    const auto value = try_parse_double(token);
    if (!value) {
      fail("malformed number '" + std::string(token) + "'");
    }
    return *value;
  }

  std::int64_t as_int(std::string_view token) const
  {
    const auto value = try_parse_int(token);
    if (!value) {
      fail("malformed integer '" + std::string(token) + "'");
    }
    return *value;
  }

  int line_number() const { return line_; }

private:
  std::string_view text_;
  std::string_view source_;
  std::size_t pos_ = 0;
  int line_ = 0;
};

inline bool valid_identifier(std::string_view id)
{
  if (id.empty()) {
    return false;
  }
  for (unsigned char ch : id) {
    if (std::isspace(ch) || !std::isprint(ch)) {
      return false;
    }
  }
  return true;
}

}  // namespace detail

inline std::optional<ObjectClass> parse_class_name(std::string_view name)
{
  if (name == "vehicle") {
    return ObjectClass::kVehicle;
  }
  if (name == "pedestrian") {
    return ObjectClass::kPedestrian;
  }
  if (name == "cyclist") {
    return ObjectClass::kCyclist;
  }
  if (name.size() > 5 && name.substr(0, 5) == "class") {
    if (const auto id = detail::try_parse_int(name.substr(5))) {
      return static_cast<ObjectClass>(static_cast<std::int32_t>(*id));
    }
  }
  return std::nullopt;
}

// -------------------------------------------------------------------------
// frame files ("LAF1")
//
//   LAF1
//   frame <frame_id> <n_points> <n_boxes> <rows> <cols>
//   <x> <y> <z> <intensity> <elongation> <ray_row> <ray_col>   (n_points lines)
//   <cx> <cy> <cz> <length> <width> <height> <heading> <class_id> <box_uid>
//                                                              (n_boxes lines)
//
// Ray indices are -1 when absent. Point ranges are derived data and restored
// as sqrt(x^2 + y^2 + z^2) on read.

inline constexpr std::string_view kFrameMagic = "LAF1";

inline std::string serialize_frame(const Frame & frame)
{
  if (!detail::valid_identifier(frame.frame_id)) {
    throw std::invalid_argument(
      "serialize_frame: frame_id must be non-empty printable text without whitespace");
  }
  std::string out;
  out.reserve(64 * (frame.points.size() + frame.boxes.size()) + 64);
  out += kFrameMagic;
  out += "\nframe ";
  out += frame.frame_id;
  out += ' ';
  out += std::to_string(frame.points.size());
  out += ' ';
  out += std::to_string(frame.boxes.size());
  out += ' ';
  out += std::to_string(frame.rows);
  out += ' ';
  out += std::to_string(frame.cols);
  out += '\n';
  for (const Point & pt : frame.points) {
    out += format_double(pt.x);
    out += ' ';
    out += format_double(pt.y);
    out += ' ';
    out += format_double(pt.z);
    out += ' ';
    out += format_double(pt.intensity);
    out += ' ';
    out += format_double(pt.elongation);
    out += ' ';
    out += std::to_string(pt.ray_row);
    out += ' ';
    out += std::to_string(pt.ray_col);
    out += '\n';
  }
  for (const Box3D & box : frame.boxes) {
    out += format_double(box.cx);
    out += ' ';
    out += format_double(box.cy);
    out += ' ';
    out += format_double(box.cz);
    out += ' ';
    out += format_double(box.length);
    out += ' ';
    out += format_double(box.width);
    out += ' ';
    out += format_double(box.height);
    out += ' ';
    out += format_double(box.heading);
    out += ' ';
    out += std::to_string(static_cast<std::int32_t>(box.class_id));
    out += ' ';
    out += std::to_string(box.box_uid);
    out += '\n';
  }
  return out;
}

inline Frame parse_frame(std::string_view text, std::string_view source = "<frame>")
{
  detail::LineReader reader(text, source);
  if (reader.required("magic 'LAF1'") != kFrameMagic) {
    reader.fail("bad magic, expected 'LAF1'");
  }
  const auto header = detail::split_tokens(reader.required("frame header"));
  if (header.size() != 6 || header[0] != "frame") {
    reader.fail("expected 'frame <id> <n_points> <n_boxes> <rows> <cols>'");
  }
  Frame frame;
  frame.frame_id = std::string(header[1]);
  const std::int64_t n_points = reader.as_int(header[2]);
  const std::int64_t n_boxes = reader.as_int(header[3]);
  frame.rows = static_cast<std::int32_t>(reader.as_int(header[4]));
  frame.cols = static_cast<std::int32_t>(reader.as_int(header[5]));
  if (n_points < 0 || n_boxes < 0) {
    reader.fail("negative point or box count");
  }
  if (frame.rows < 0 || frame.cols < 0 || (frame.rows == 0) != (frame.cols == 0)) {
    reader.fail("range-view dims must both be positive or both zero");
  }
  frame.points.reserve(static_cast<std::size_t>(n_points));
  for (std::int64_t i = 0; i < n_points; ++i) {
    const auto tok = detail::split_tokens(reader.required("point line"));
    if (tok.size() != 7) {
      reader.fail("point line needs exactly 7 fields");
    }
    Point pt;
    pt.x = reader.as_double(tok[0]);
    pt.y = reader.as_double(tok[1]);
    pt.z = reader.as_double(tok[2]);
    pt.intensity = reader.as_double(tok[3]);
    pt.elongation = reader.as_double(tok[4]);
    pt.ray_row = static_cast<std::int32_t>(reader.as_int(tok[5]));
    pt.ray_col = static_cast<std::int32_t>(reader.as_int(tok[6]));
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z)) {
      reader.fail("point coordinates must be finite");
    }
    if (!(pt.intensity >= 0.0 && pt.intensity <= 1.0) ||
        !(pt.elongation >= 0.0 && pt.elongation <= 1.0)) {
      reader.fail("intensity and elongation must lie in [0, 1]");
    }
    if (pt.ray_row < kNoRay || pt.ray_col < kNoRay) {
      reader.fail("ray indices must be >= -1");
    }
    if ((pt.ray_row == kNoRay) != (pt.ray_col == kNoRay)) {
      reader.fail("ray_row and ray_col must be set together");
    }
    if (pt.has_ray()) {
      if (frame.rows == 0) {
        reader.fail("point carries ray indices but the frame declares no range view");
      }
      if (pt.ray_row >= frame.rows || pt.ray_col >= frame.cols) {
        reader.fail("ray indices outside the declared range-view grid");
      }
    }
    pt.range = std::sqrt(pt.x * pt.x + pt.y * pt.y + pt.z * pt.z);
    frame.points.push_back(pt);
  }
  std::set<std::int64_t> uids;
  frame.boxes.reserve(static_cast<std::size_t>(n_boxes));
  for (std::int64_t i = 0; i < n_boxes; ++i) {
    const auto tok = detail::split_tokens(reader.required("box line"));
    if (tok.size() != 9) {
      reader.fail("box line needs exactly 9 fields");
    }
    Box3D box;
    box.cx = reader.as_double(tok[0]);
    box.cy = reader.as_double(tok[1]);
    box.cz = reader.as_double(tok[2]);
    box.length = reader.as_double(tok[3]);
    box.width = reader.as_double(tok[4]);
    box.height = reader.as_double(tok[5]);
    box.heading = reader.as_double(tok[6]);
    box.class_id = static_cast<ObjectClass>(static_cast<std::int32_t>(reader.as_int(tok[7])));
    box.box_uid = reader.as_int(tok[8]);
    if (!std::isfinite(box.cx) || !std::isfinite(box.cy) || !std::isfinite(box.cz)) {
      reader.fail("box center must be finite");
    }
    if (!(box.length > 0.0 && box.width > 0.0 && box.height > 0.0)) {
      reader.fail("box extents must be positive");
    }
    if (!(box.heading > -kPi && box.heading <= kPi)) {
      reader.fail("box heading must lie in (-pi, pi]");
    }
    if (!uids.insert(box.box_uid).second) {
      reader.fail("duplicate box_uid " + std::to_string(box.box_uid));
    }
    frame.boxes.push_back(box);
  }
  reader.expect_end();
  return frame;
}

// -------------------------------------------------------------------------
// object bank files ("LAB1")
//
//   LAB1
//   bank <n_exemplars>
//   exemplar <source_frame_id> <n_points> <cx> <cy> <cz> <length> <width>
//            <height> <heading> <class_id> <box_uid>
//   <x> <y> <z> <intensity> <elongation>        (n_points box-local lines)
//   ...

inline constexpr std::string_view kBankMagic = "LAB1";

inline std::string serialize_bank(const ObjectBank & bank)
{
  std::string out;
  out += kBankMagic;
  out += "\nbank ";
  out += std::to_string(bank.exemplars.size());
  out += '\n';
  for (const ObjectExemplar & exemplar : bank.exemplars) {
    if (!detail::valid_identifier(exemplar.source_frame_id)) {
      throw std::invalid_argument(
        "serialize_bank: source_frame_id must be non-empty printable text without whitespace");
    }
    const Box3D & box = exemplar.box;
    out += "exemplar ";
    out += exemplar.source_frame_id;
    out += ' ';
    out += std::to_string(exemplar.points.size());
    out += ' ';
    out += format_double(box.cx);
    out += ' ';
    out += format_double(box.cy);
    out += ' ';
    out += format_double(box.cz);
    out += ' ';
    out += format_double(box.length);
    out += ' ';
    out += format_double(box.width);
    out += ' ';
    out += format_double(box.height);
    out += ' ';
    out += format_double(box.heading);
    out += ' ';
    out += std::to_string(static_cast<std::int32_t>(box.class_id));
    out += ' ';
    out += std::to_string(box.box_uid);
    out += '\n';
    for (const Point & pt : exemplar.points) {
      out += format_double(pt.x);
      out += ' ';
      out += format_double(pt.y);
      out += ' ';
      out += format_double(pt.z);
      out += ' ';
      out += format_double(pt.intensity);
      out += ' ';
      out += format_double(pt.elongation);
      out += '\n';
    }
  }
  return out;
}

inline ObjectBank parse_bank(std::string_view text, std::string_view source = "<bank>")
{
  detail::LineReader reader(text, source);
  if (reader.required("magic 'LAB1'") != kBankMagic) {
    reader.fail("bad magic, expected 'LAB1'");
  }
  const auto header = detail::split_tokens(reader.required("bank header"));
  if (header.size() != 2 || header[0] != "bank") {
    reader.fail("expected 'bank <n_exemplars>'");
  }
  const std::int64_t n_exemplars = reader.as_int(header[1]);
  if (n_exemplars < 0) {
    reader.fail("negative exemplar count");
  }
  ObjectBank bank;
  bank.exemplars.reserve(static_cast<std::size_t>(n_exemplars));
  for (std::int64_t e = 0; e < n_exemplars; ++e) {
    const auto tok = detail::split_tokens(reader.required("exemplar header"));
    if (tok.size() != 12 || tok[0] != "exemplar") {
      reader.fail("expected 'exemplar <source> <n_points> <box x 7> <class_id> <box_uid>'");
    }
    ObjectExemplar exemplar;
    exemplar.source_frame_id = std::string(tok[1]);
    const std::int64_t n_points = reader.as_int(tok[2]);
    if (n_points <= 0) {
      reader.fail("exemplar must have a positive point count");
    }
    Box3D & box = exemplar.box;
    box.cx = reader.as_double(tok[3]);
    box.cy = reader.as_double(tok[4]);
    box.cz = reader.as_double(tok[5]);
    box.length = reader.as_double(tok[6]);
    box.width = reader.as_double(tok[7]);
    box.height = reader.as_double(tok[8]);
    box.heading = reader.as_double(tok[9]);
    box.class_id = static_cast<ObjectClass>(static_cast<std::int32_t>(reader.as_int(tok[10])));
    box.box_uid = reader.as_int(tok[11]);
    if (!(box.length > 0.0 && box.width > 0.0 && box.height > 0.0)) {
      reader.fail("box extents must be positive");
    }
    if (!(box.heading > -kPi && box.heading <= kPi)) {
      reader.fail("box heading must lie in (-pi, pi]");
    }
    for (std::int64_t i = 0; i < n_points; ++i) {
      const auto ptok = detail::split_tokens(reader.required("exemplar point line"));
      if (ptok.size() != 5) {
        reader.fail("exemplar point line needs exactly 5 fields");
      }
      Point pt;
      pt.x = reader.as_double(ptok[0]);
      pt.y = reader.as_double(ptok[1]);
      pt.z = reader.as_double(ptok[2]);
      pt.intensity = reader.as_double(ptok[3]);
      pt.elongation = reader.as_double(ptok[4]);
      if (!(pt.intensity >= 0.0 && pt.intensity <= 1.0) ||
          !(pt.elongation >= 0.0 && pt.elongation <= 1.0)) {
        reader.fail("intensity and elongation must lie in [0, 1]");
      }
      // Local coordinates must stay inside the box (tiny slack for the
      // world->local rotation's rounding).
      constexpr double kSlack = 1e-9;
      if (std::abs(pt.x) > 0.5 * box.length + kSlack || std::abs(pt.y) > 0.5 * box.width + kSlack ||
          std::abs(pt.z) > 0.5 * box.height + kSlack) {
        reader.fail("exemplar point lies outside its box");
      }
      pt.range = std::sqrt(pt.x * pt.x + pt.y * pt.y + pt.z * pt.z);
      exemplar.points.push_back(pt);
    }
    bank.exemplars.push_back(std::move(exemplar));
  }
  reader.expect_end();
  return bank;
}

// -------------------------------------------------------------------------
// range image files ("LAR1")
//
//   LAR1
//   image <rows> <cols> <azimuth_origin>
//   incl <inclination per row>
//   <range> <intensity> <elongation>             (rows * cols cell lines)
//
// Empty cells are "-1 0 0".

inline constexpr std::string_view kImageMagic = "LAR1";

inline std::string serialize_image(const RangeImage & img)
{
  img.geometry.validate();
  std::string out;
  out.reserve(24 * img.cells.size() + 64);
  out += kImageMagic;
  out += "\nimage ";
  out += std::to_string(img.geometry.rows);
  out += ' ';
  out += std::to_string(img.geometry.cols);
  out += ' ';
  out += format_double(img.geometry.azimuth_origin);
  out += "\nincl";
  for (double incl : img.geometry.inclinations) {
    out += ' ';
    out += format_double(incl);
  }
  out += '\n';
  for (const RangeCell & cell : img.cells) {
    out += format_double(cell.range);
    out += ' ';
    out += format_double(cell.intensity);
    out += ' ';
    out += format_double(cell.elongation);
    out += '\n';
  }
  return out;
}

inline RangeImage parse_image(std::string_view text, std::string_view source = "<image>")
{
  detail::LineReader reader(text, source);
  if (reader.required("magic 'LAR1'") != kImageMagic) {
    reader.fail("bad magic, expected 'LAR1'");
  }
  const auto header = detail::split_tokens(reader.required("image header"));
  if (header.size() != 4 || header[0] != "image") {
    reader.fail("expected 'image <rows> <cols> <azimuth_origin>'");
  }
  RangeViewGeometry geom;
  geom.rows = static_cast<std::int32_t>(reader.as_int(header[1]));
  geom.cols = static_cast<std::int32_t>(reader.as_int(header[2]));
  geom.azimuth_origin = reader.as_double(header[3]);
  const auto incl_tok = detail::split_tokens(reader.required("inclination line"));
  if (incl_tok.empty() || incl_tok[0] != "incl") {
    reader.fail("expected 'incl <one value per row>'");
  }
  if (geom.rows < 1 || static_cast<std::int64_t>(incl_tok.size()) - 1 != geom.rows) {
    reader.fail("inclination line must list exactly one value per row");
  }
  for (std::size_t i = 1; i < incl_tok.size(); ++i) {
    geom.inclinations.push_back(reader.as_double(incl_tok[i]));
  }
  try {
    geom.validate();
  } catch (const std::invalid_argument & err) {
    reader.fail(err.what());
  }
  RangeImage img(geom);
  for (std::size_t i = 0; i < img.cells.size(); ++i) {
    const auto tok = detail::split_tokens(reader.required("cell line"));
    if (tok.size() != 3) {
      reader.fail("cell line needs exactly 3 fields");
    }
    RangeCell cell;
    cell.range = reader.as_double(tok[0]);
    cell.intensity = reader.as_double(tok[1]);
    cell.elongation = reader.as_double(tok[2]);
    if (!(cell.range >= 0.0 || cell.range == kEmptyCellRange)) {
      reader.fail("cell range must be >= 0, or exactly -1 for an empty cell");
    }
    if (cell.empty() && (cell.intensity != 0.0 || cell.elongation != 0.0)) {
      reader.fail("empty cells must have zero intensity and elongation");
    }
    img.cells[i] = cell;
  }
  reader.expect_end();
  return img;
}

// -------------------------------------------------------------------------
// policy files ("LAP1")
//
//   LAP1
//   op <name>
//   param <name> [class=<class>] driver=<m|p> coeff=<v> offset=<v> lo=<v> hi=<v>

inline constexpr std::string_view kPolicyMagic = "LAP1";

inline std::string serialize_policy(const PolicySpec & spec)
{
  std::string out;
  out += kPolicyMagic;
  out += '\n';
  for (const OpSpec & op : spec.ops) {
    out += "op ";
    out += op.op;
    out += '\n';
    for (const PolicyParam & param : op.params) {
      out += "param ";
      out += param.name;
      if (param.cls) {
        out += " class=";
        out += class_name(*param.cls);
      }
      out += " driver=";
      out += param.formula.driver == Driver::kMagnitude ? 'm' : 'p';
      out += " coeff=";
      out += format_double(param.formula.coeff);
      out += " offset=";
      out += format_double(param.formula.offset);
      out += " lo=";
      out += format_double(param.formula.clip_lo);
      out += " hi=";
      out += format_double(param.formula.clip_hi);
      out += '\n';
    }
  }
  return out;
}

inline PolicySpec parse_policy(std::string_view text, std::string_view source = "<policy>")
{
  detail::LineReader reader(text, source);
  if (reader.required("magic 'LAP1'") != kPolicyMagic) {
    reader.fail("bad magic, expected 'LAP1'");
  }
  PolicySpec spec;
  OpSpec * current = nullptr;
  while (const auto line_opt = reader.next()) {
    const auto tok = detail::split_tokens(*line_opt);
    if (tok.empty()) {
      continue;
    }
    if (tok[0] == "op") {
      if (tok.size() != 2) {
        reader.fail("expected 'op <name>'");
      }
      const std::string name(tok[1]);
      bool known = false;
      for (const std::string & op : pipeline_op_order()) {
        known = known || op == name;
      }
      if (!known) {
        reader.fail("unknown op '" + name + "'");
      }
      if (spec.find_op(name) != nullptr) {
        reader.fail("duplicate op section '" + name + "'");
      }
      spec.ops.push_back(OpSpec{name, {}});
      current = &spec.ops.back();
      continue;
    }
    if (tok[0] == "param") {
      if (current == nullptr) {
        reader.fail("'param' before any 'op' line");
      }
      std::size_t i = 1;
      if (tok.size() < 2) {
        reader.fail("param line needs a parameter name");
      }
      PolicyParam param;
      param.name = std::string(tok[i++]);
      auto take = [&](std::string_view key) -> std::string_view {
        if (i >= tok.size() || tok[i].substr(0, key.size() + 1) != std::string(key) + "=") {
          reader.fail("expected '" + std::string(key) + "=<value>'");
        }
        return tok[i++].substr(key.size() + 1);
      };
      if (i < tok.size() && tok[i].substr(0, 6) == "class=") {
        const auto cls = parse_class_name(tok[i].substr(6));
        if (!cls) {
          reader.fail("unknown class '" + std::string(tok[i].substr(6)) + "'");
        }
        param.cls = *cls;
        ++i;
      }
      const std::string_view driver = take("driver");
      if (driver == "m") {
        param.formula.driver = Driver::kMagnitude;
      } else if (driver == "p") {
        param.formula.driver = Driver::kProbability;
      } else {
        reader.fail("driver must be 'm' or 'p'");
      }
      param.formula.coeff = reader.as_double(take("coeff"));
      param.formula.offset = reader.as_double(take("offset"));
      param.formula.clip_lo = reader.as_double(take("lo"));
      param.formula.clip_hi = reader.as_double(take("hi"));
      if (i != tok.size()) {
        reader.fail("unexpected trailing tokens on param line");
      }
      if (!(param.formula.clip_lo <= param.formula.clip_hi)) {
        reader.fail("param clip bounds out of order");
      }
      if (current->find(param.name, param.cls) != nullptr) {
        reader.fail("duplicate param '" + param.name + "' in op '" + current->op + "'");
      }
      current->params.push_back(std::move(param));
      continue;
    }
    reader.fail("expected 'op' or 'param' line");
  }
  return spec;
}

// -------------------------------------------------------------------------
// score tables (TSV)
//
//   m<TAB>p<TAB>score<TAB>status
//
// One row per evaluated grid cell, status "ok" or "failed" (failed rows carry
// score nan). Written append-only so an interrupted search resumes from the
// longest valid prefix.

struct ScoreRow
{
  double m = 0.0;
  double p = 0.0;
  double score = 0.0;
  bool ok = true;
};

inline constexpr std::string_view kScoreTableHeader = "m\tp\tscore\tstatus";

inline std::string format_score_row(const ScoreRow & row)
{
  std::string out;
  out += format_double(row.m);
  out += '\t';
  out += format_double(row.p);
  out += '\t';
  out += format_double(row.score);
  out += '\t';
  out += row.ok ? "ok" : "failed";
  out += '\n';
  return out;
}

// Parse one table row; nullopt when the line is malformed or torn.
inline std::optional<ScoreRow> parse_score_row(std::string_view line)
{
  if (!line.empty() && line.back() == '\r') {
    line.remove_suffix(1);
  }
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  if (fields.size() != 4) {
    return std::nullopt;
  }
  const auto m = detail::try_parse_double(fields[0]);
  const auto p = detail::try_parse_double(fields[1]);
  const auto score = detail::try_parse_double(fields[2]);
  if (!m || !p || !score) {
    return std::nullopt;
  }
  if (fields[3] != "ok" && fields[3] != "failed") {
    return std::nullopt;
  }
  return ScoreRow{*m, *p, *score, fields[3] == "ok"};
}

// -------------------------------------------------------------------------
// run manifests ("LAM1"): what cmd_apply did, deterministically.

inline constexpr std::string_view kManifestMagic = "LAM1";

inline std::string build_manifest(
  const std::string & policy_text, double m, double p, std::uint64_t seed,
  const ApplyStats & stats)
{
  char hash_buf[20];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016" PRIx64, fnv1a64(policy_text));
  std::string out;
  out += kManifestMagic;
  out += "\npolicy_hash ";
  out += hash_buf;
  out += "\nm ";
  out += format_double(m);
  out += "\np ";
  out += format_double(p);
  out += "\nseed ";
  out += std::to_string(seed);
  out += "\nframes ";
  out += std::to_string(stats.frames);
  out += '\n';
  for (const auto & [key, count] : stats.fires) {
    out += "fire ";
    out += key;
    out += ' ';
    out += std::to_string(count);
    out += '\n';
  }
  return out;
}

// -------------------------------------------------------------------------
// filesystem helpers

inline std::string read_text_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Write via a sibling temp file + rename, so readers never observe a torn
// file and an interrupted writer leaves the previous content intact.
inline void atomic_write_file(const std::filesystem::path & path, std::string_view content)
{
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      throw std::runtime_error("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace lidaraug

#endif  // LIDARAUG__IO_HPP_
