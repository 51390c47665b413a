// Serialization: scheme/coefficient/measurement JSON formats, report JSON,
// CSV helpers, and the initial-state mini-language used by the CLI.

#pragma once

#include <string>
#include <vector>

#include "qwalk/encoding.hpp"
#include "qwalk/reconstruct.hpp"
#include "qwalk/walk.hpp"

// vendored single-header nlohmann/json
#include "json.hpp"

namespace qwalk {

using json = nlohmann::json;

// printf %.12g; all tabular numeric output uses 12 significant digits
std::string fmt_g12(double v);

// round to 12 significant digits for JSON emission
double round12(double v);

json complex_to_json(const Cx& z);
Cx complex_from_json(const json& j);

json coeffs_to_json(const Eigen::VectorXcd& v);
Eigen::VectorXcd coeffs_from_json(const json& j);

json scheme_to_json(const EncodingScheme& s);
EncodingScheme scheme_from_json(const json& j, bool validate = true);

struct MeasurementSet {
    std::vector<RunRecord> runs;
    double theta_star_deg = 0.0;
    double r = 0.0;
    double noise_scale = 0.0;
};

json measurements_to_json(const MeasurementSet& m);
MeasurementSet measurements_from_json(const json& j);

json report_to_json(const ReconstructionReport& rep);

// "amp:pos:coinbranch" terms, comma separated; amp accepts re, imj and
// re+imj forms ("0.8:-1:c0, 0.6:1:c0"). The state is normalized on parse.
struct ParsedState {
    WalkState state;
    double raw_norm = 1.0;  // norm before normalization, for the CLI warning
};
ParsedState parse_initial_state(const std::string& spec);

Cx parse_complex_amp(const std::string& text);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace qwalk
