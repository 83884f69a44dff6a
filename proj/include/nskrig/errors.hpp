#ifndef NSKRIG_ERRORS_HPP
#define NSKRIG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nskrig {

// Exit-code categories surfaced by the CLI: 2 input, 3 conditioning, 4 convergence.
enum class errc : int { input = 2, conditioning = 3, convergence = 4 };

class error : public std::runtime_error {
public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

private:
  errc code_;
};

class input_error : public error {
public:
  explicit input_error(const std::string& what) : error(errc::input, what) {}
};

class conditioning_error : public error {
public:
  explicit conditioning_error(const std::string& what) : error(errc::conditioning, what) {}
};

class convergence_error : public error {
public:
  explicit convergence_error(const std::string& what) : error(errc::convergence, what) {}
};

} // namespace nskrig

#endif
