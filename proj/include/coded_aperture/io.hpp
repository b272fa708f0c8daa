#ifndef CODED_APERTURE_IO_HPP
#define CODED_APERTURE_IO_HPP

#include "coded_aperture/certificate.hpp"
#include "coded_aperture/model.hpp"

#include <json.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace cap {

/// Malformed aperture file or CSV input.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Aperture file:
///
///   n=<int> dims=<1|2> kind=<binary|continuous>
///   <n or n*n values, row-major, 17 significant digits>
void write_aperture(std::ostream& out, const Aperture& a);
Aperture read_aperture(std::istream& in);

void save_aperture(const std::string& path, const Aperture& a);
Aperture load_aperture(const std::string& path);

/// 17 significant digits; round-trips every double exactly.
std::string format_number(double v);

nlohmann::json to_json(const DesignCertificate& cert);

/// Multi-line human-readable summary.
std::string summarize(const DesignCertificate& cert);

}  // namespace cap

#endif  // CODED_APERTURE_IO_HPP
