#pragma once

#include "tdform/errors.hpp"
#include "tdform/linalg.hpp"
#include "tdform/forms.hpp"
#include "tdform/hilbert_scale.hpp"
#include "tdform/hamiltonian.hpp"
#include "tdform/regularity.hpp"
#include "tdform/models.hpp"
#include "tdform/propagator.hpp"
#include "tdform/config.hpp"
#include "tdform/output.hpp"
#include "tdform/experiments.hpp"
