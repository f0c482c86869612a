#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cuescope {

// Streaming writer for byte-stable JSON documents: two-space indentation,
// keys in insertion order, reals either in fixed notation or shortest
// round-trip form.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view name);

  JsonWriter& value(std::string_view s);
  JsonWriter& value(const char* s) { return value(std::string_view(s)); }
  JsonWriter& value(bool b);
  JsonWriter& value(std::size_t n);
  JsonWriter& value(long long n);
  JsonWriter& null();
  // Fixed notation with `digits` fractional digits; non-finite becomes null.
  JsonWriter& fixed(double v, int digits = 6);
  // Shortest representation that parses back to the same double.
  JsonWriter& shortest(double v);

  // The finished document, newline-terminated.
  std::string str() const { return out_ + "\n"; }

 private:
  void before_value();
  void newline();
  void raw(std::string_view token);

  struct Level {
    bool array = false;
    bool empty = true;
  };
  std::string out_;
  std::vector<Level> stack_;
  bool after_key_ = false;
};

std::string format_fixed(double v, int digits);
std::string format_shortest(double v);

}  // namespace cuescope
