// Copyright 2026 The SQRS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SQRS_ERRORS_H
#define SQRS_ERRORS_H

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace sqrs {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NormalizationError : Error {
    using Error::Error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct NotHermitianError : Error {
    using Error::Error;
};
/// A matrix that fails the density-matrix invariants.
struct InvalidStateError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

/// Alice's projection onto a branch with probability below 1e-15.
struct DegenerateBranchError : Error {
    using Error::Error;
};

/// Fisher information requested where the Bernoulli probability is 0 or 1,
/// where it is the indeterminate form 0/0.
struct BoundaryProbabilityError : Error {
    BoundaryProbabilityError(double p, double slope)
        : Error("Bernoulli Fisher information undefined at p=" + std::to_string(p) +
                " (slope " + std::to_string(slope) + ")"),
          probability(p),
          slope(slope) {
    }
    double probability;
    double slope;
};

struct ClassificationError : Error {
    using Error::Error;
};
struct EstimationError : Error {
    using Error::Error;
};
struct TomographyError : Error {
    using Error::Error;
};

/// Tomography produced a state further from the singlet than allowed.
struct CalibrationAbort : Error {
    CalibrationAbort(double fidelity, double threshold)
        : Error("calibration abort: fidelity to singlet " + std::to_string(fidelity) + " below threshold " +
                std::to_string(threshold)),
          fidelity(fidelity),
          threshold(threshold) {
    }
    double fidelity;
    double threshold;
};

struct TransportError : Error {
    using Error::Error;
};
struct TruncatedFrameError : TransportError {
    using TransportError::TransportError;
};
struct BadMagicError : TransportError {
    using TransportError::TransportError;
};
struct UnsupportedVersionError : TransportError {
    using TransportError::TransportError;
};
struct UnknownKindError : TransportError {
    using TransportError::TransportError;
};
struct ChecksumMismatchError : TransportError {
    using TransportError::TransportError;
};
struct PayloadError : TransportError {
    using TransportError::TransportError;
};

/// The byte stream ended or failed mid-sweep. Carries the id of the last
/// phase point whose outcomes were fully received, if any, so the sender can
/// be restarted after it.
struct ConnectionLostError : TransportError {
    ConnectionLostError(const std::string &what, std::optional<std::uint16_t> last_phase_point_id)
        : TransportError(what), last_phase_point_id(last_phase_point_id) {
    }
    std::optional<std::uint16_t> last_phase_point_id;
};

}  // namespace sqrs

#endif
