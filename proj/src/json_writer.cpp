#include "cuescope/json_writer.hpp"

#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

namespace cuescope {

std::string format_fixed(double v, int digits) {
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  std::string s(buf, res.ptr);
  // "-0.000000" and "0.000000" must not differ across platforms or rounding paths
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string format_shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void JsonWriter::newline() {
  out_ += '\n';
  out_.append(2 * stack_.size(), ' ');
}

void JsonWriter::before_value() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (stack_.empty()) return;
  auto& top = stack_.back();
  if (!top.empty) out_ += ',';
  top.empty = false;
  newline();
}

void JsonWriter::raw(std::string_view token) {
  before_value();
  out_ += token;
}

JsonWriter& JsonWriter::begin_object() {
  before_value();
  out_ += '{';
  stack_.push_back({false, true});
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  const bool empty = stack_.back().empty;
  stack_.pop_back();
  if (!empty) newline();
  out_ += '}';
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  before_value();
  out_ += '[';
  stack_.push_back({true, true});
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  const bool empty = stack_.back().empty;
  stack_.pop_back();
  if (!empty) newline();
  out_ += ']';
  return *this;
}

JsonWriter& JsonWriter::key(std::string_view name) {
  before_value();
  out_ += nlohmann::json(std::string(name)).dump();
  out_ += ": ";
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(std::string_view s) {
  raw(nlohmann::json(std::string(s)).dump());
  return *this;
}

JsonWriter& JsonWriter::value(bool b) {
  raw(b ? "true" : "false");
  return *this;
}

JsonWriter& JsonWriter::value(std::size_t n) {
  raw(std::to_string(n));
  return *this;
}

JsonWriter& JsonWriter::value(long long n) {
  raw(std::to_string(n));
  return *this;
}

JsonWriter& JsonWriter::null() {
  raw("null");
  return *this;
}

JsonWriter& JsonWriter::fixed(double v, int digits) {
  if (!std::isfinite(v)) return null();
  raw(format_fixed(v, digits));
  return *this;
}

JsonWriter& JsonWriter::shortest(double v) {
  if (!std::isfinite(v)) return null();
  raw(format_shortest(v));
  return *this;
}

}  // namespace cuescope
