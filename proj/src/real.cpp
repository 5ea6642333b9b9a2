#include "giem/real.hpp"

#include <cmath>

#include "giem/errors.hpp"

namespace giem {

void set_extended_bits(int bits) {
  if (bits < 64 || bits > 100000) throw Error(ErrorKind::InvalidArgument, "extended precision must be 64..100000 bits");
  Extended::default_precision(static_cast<unsigned>(std::ceil(bits * 0.30102999566398120)));
}

int extended_bits() {
  return static_cast<int>(std::floor(Extended::default_precision() / 0.30102999566398120));
}

template <class Real>
Real parse_real(const std::string& text) {
  if (text == "golden") return golden<Real>();
  if (text == "1-golden") return 1 - golden<Real>();
  try {
    std::size_t used = 0;
    if constexpr (std::is_same_v<Real, double>) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } else {
      (void)used;
      return Real(text);
    }
  } catch (const std::exception&) {
    throw Error(ErrorKind::ConfigParse, "not a number: '" + text + "'");
  }
}

template double parse_real<double>(const std::string&);
template Extended parse_real<Extended>(const std::string&);

}  // namespace giem
