#include "geh/vcg.hpp"

#include <iomanip>
#include <ostream>
#include <string>

namespace geh::vcg {

ecg::MedianBeat baseline_correct(const ecg::MedianBeat& beat) {
    const int b = beat.fiducials.baseline;
    if (b < 0 || static_cast<std::size_t>(b) >= beat.length()) {
        throw Error(ErrorKind::MissingFiducial, "baseline sample outside beat");
    }
    ecg::MedianBeat out = beat;
    for (auto& lead : out.leads) {
        if (lead.empty()) continue;
        const double level = lead[static_cast<std::size_t>(b)];
        for (double& v : lead) v -= level;
    }
    return out;
}

Vcg kors_transform(const ecg::MedianBeat& beat) {
    const auto n = beat.length();
    for (auto lead : kKorsInputs) {
        const auto& series = beat.leads[ecg::index(lead)];
        if (series.empty() || series.size() != n) {
            throw Error(ErrorKind::MissingLead, std::string(ecg::kLeadNames[ecg::index(lead)]));
        }
    }

    Vcg vcg;
    vcg.sampling_rate_hz = beat.sampling_rate_hz;
    vcg.fiducials = beat.fiducials;
    std::array<std::vector<double>*, 3> rows = {&vcg.x, &vcg.y, &vcg.z};
    for (std::size_t r = 0; r < 3; ++r) {
        auto& out = *rows[r];
        out.assign(n, 0.0);
        for (std::size_t c = 0; c < kKorsInputs.size(); ++c) {
            const double k = kKorsMatrix[r][c];
            const auto& in = beat.leads[ecg::index(kKorsInputs[c])];
            for (std::size_t t = 0; t < n; ++t) out[t] += k * in[t];
        }
    }
    return vcg;
}

void write_vcg_table(std::ostream& out, const Vcg& vcg) {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << "x,y,z\n" << std::setprecision(9);
    for (std::size_t t = 0; t < vcg.length(); ++t) {
        out << vcg.x[t] << ',' << vcg.y[t] << ',' << vcg.z[t] << '\n';
    }
    out.flags(flags);
    out.precision(precision);
}

}  // namespace geh::vcg
