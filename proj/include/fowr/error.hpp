#pragma once

#include <stdexcept>
#include <string>

namespace fowr {

// Base of every error raised by the library. The CLI maps these to the
// "data error" exit status.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class invalid_parameter : public error {
 public:
  using error::error;
};

class invalid_dataset : public error {
 public:
  using error::error;
};

class missing_data : public error {
 public:
  using error::error;
};

class length_mismatch : public error {
 public:
  using error::error;
};

class undefined_correlation : public error {
 public:
  using error::error;
};

class parse_error : public error {
 public:
  parse_error(const std::string& what, std::size_t line)
      : error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

  /// The same error, prefixed with the file it came from.
  parse_error in_file(const std::string& path) const {
    parse_error e(path + ": " + what(), 0);
    e.line_ = line_;
    return e;
  }

 private:
  std::size_t line_;
};

class session_error : public error {
 public:
  enum class kind { not_found, conflict, out_of_order, duplicate, premature, closed, invalid };
  session_error(kind k, const std::string& what) : error(what), kind_(k) {}
  kind code() const noexcept { return kind_; }

 private:
  kind kind_;
};

}  // namespace fowr
