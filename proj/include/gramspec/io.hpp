#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gramspec/harness.hpp"
#include "gramspec/profile.hpp"
#include "gramspec/qve.hpp"
#include "gramspec/stability.hpp"
#include "gramspec/zero.hpp"

namespace gramspec {

using Json = nlohmann::ordered_json;

/// `.json`: {"p": p, "n": n, "entries": [row-major]} or {"s": [[row], ...]}.
/// Anything else is read as CSV with one row of S per line. Throws InvalidArgument on I/O or format errors.
VarianceProfile load_profile(const std::string& path);
void save_profile_csv(const VarianceProfile& profile, const std::string& path);

/// "uniform-square" (s = 1/(2p), n = p) or "uniform-rect" (n = p/2, s = 1/(p+n)).
VarianceProfile demo_profile(const std::string& name, int p);

/// 17 significant digits, enough to read back the same double.
std::string format_double(double x);

/// Parses "a+bi", "a-bi", "bi", "a".
cplx parse_complex(const std::string& text);
std::string format_complex(cplx z);

/// "start:stop:count".
std::vector<double> parse_grid(const std::string& spec);
std::vector<double> parse_list(const std::string& text);

void write_density_csv(const DensityCurve& curve, const std::string& path);
/// Reads grid and values back; scalars live in the manifest.
DensityCurve read_density_csv(const std::string& path);

Json to_json(const DensityCurve& curve, bool include_samples = true);
Json to_json(const AssumptionReport& report);
Json to_json(const ZeroStructure& zero);
Json to_json(const StabilityReport& report);
Json to_json(const RotationInversionResult& result);
Json to_json(const VerificationReport& report);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_report_csv(const VerificationReport& report, const std::string& path);

void write_text(const std::string& path, const std::string& text);
void write_json(const std::string& path, const Json& json);

}  // namespace gramspec
