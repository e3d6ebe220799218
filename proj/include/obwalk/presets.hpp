#pragma once

#include <string>
#include <vector>

#include "obwalk/channel.hpp"
#include "obwalk/limit.hpp"

namespace obwalk {

/**
 * Parameters shared by the built-in presets. p and tau shape the two-outcome
 * examples (outcome-1 weight and coordinate phase); h picks the step size
 * when a family preset is frozen into a single ClassicalUnitary.
 */
struct PresetOptions {
    double p = 0.5;
    double tau = 0.0;
    double h = 0.01;
};

/** Names accepted by family_preset, in documentation order. */
std::vector<std::string> family_preset_names();

bool is_family_preset(const std::string& name);

/**
 * Step-size families of interaction unitaries with their analytic limit
 * models attached (has_model = true on every preset):
 *  - dim2-diffusive: two outcomes, U_i = exp(sqrt(h) O_i + h P_i) with
 *    p O_1 + q O_2 = 0; diffusive limit driven by e^{i tau} W.
 *  - dim2-poisson: rare second outcome (weight h/(1+h)) applying a fixed
 *    jump unitary; limit driven by -(N_t - t), intensity 1.
 *  - physical-1d: dipole-interaction form, U_1 = exp(-ih(H - V)),
 *    U_2 = exp(-i(hH + V)); limit driven by N_t - t, one jump unitary
 *    W = exp(-iV).
 *  - dim3-brownian2: three outcomes with fixed coordinate vectors
 *    (1,0), (-1,1), (-1,-2) and weights (1/2, 1/3, 1/6); two independent
 *    Brownian drivers.
 *  - dim3-mixed: three outcomes mixing one Poisson and one Brownian source
 *    through mixing [[1,i],[i,1]]/sqrt(2).
 */
HFamily family_preset(const std::string& name, const PresetOptions& opt = {});

/**
 * Fixed classical unitary presets: "dim2-example" is the two-outcome system
 * with coordinate values sqrt(q/p) e^{i tau}, -sqrt(p/q) e^{i tau} and two
 * fixed branch unitaries; any family preset name is frozen at step size
 * opt.h. Unknown names throw InputError.
 */
ClassicalUnitary unitary_preset(const std::string& name,
                                const PresetOptions& opt = {});

/**
 * Loads a family from JSON of the form
 *   {"preset": "<family name>", "p": 0.5, "tau": 0.0}
 * where the parameter fields are optional overrides.
 */
HFamily family_from_json(const std::string& text);

}  // namespace obwalk
