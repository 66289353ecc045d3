#pragma once

#include <stdexcept>
#include <string>

namespace wirerecon {

/// Base class for all library errors. CLI maps subclasses onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (files, schemas, flag values).
struct InputError : Error {
    using Error::Error;
};

/// Geometry or data configuration that admits no solution.
struct GeometryError : Error {
    using Error::Error;
};

/// Numerical failure (divergence, non-finite values).
struct NumericError : Error {
    using Error::Error;
};

#define WIRERECON_ERROR(Name, Base)                                           \
    struct Name : Base {                                                       \
        using Base::Base;                                                      \
        Name() : Base(#Name) {}                                                \
    }

// geometry
WIRERECON_ERROR(NonFiniteInput, InputError);
WIRERECON_ERROR(PointBehindCamera, GeometryError);
WIRERECON_ERROR(DomainError, InputError);
WIRERECON_ERROR(ZeroVector, InputError);
WIRERECON_ERROR(DegenerateCurve, InputError);
WIRERECON_ERROR(DeltaTooLarge, InputError);

// calibration
WIRERECON_ERROR(InsufficientPoints, InputError);
WIRERECON_ERROR(RankDeficientNeighborhood, GeometryError);
WIRERECON_ERROR(OutsideSupport, GeometryError);
WIRERECON_ERROR(DegenerateConfiguration, GeometryError);
WIRERECON_ERROR(NoConsensus, GeometryError);
WIRERECON_ERROR(DivergedError, NumericError);
WIRERECON_ERROR(SingularLeftBlock, GeometryError);

// reconstruction
WIRERECON_ERROR(CoincidentCenters, GeometryError);
WIRERECON_ERROR(NoOverlap, GeometryError);
WIRERECON_ERROR(AmbiguousTopology, GeometryError);
WIRERECON_ERROR(BehindCamera, GeometryError);
WIRERECON_ERROR(IllConditioned, GeometryError);
WIRERECON_ERROR(EmptyCurve, InputError);

// curve representation
WIRERECON_ERROR(RadiusTooLarge, InputError);

// metrics
WIRERECON_ERROR(EmptyPolyline, InputError);

// predictor
WIRERECON_ERROR(DimensionMismatch, InputError);
WIRERECON_ERROR(EmptySequence, InputError);
WIRERECON_ERROR(LengthExceedsM, InputError);
WIRERECON_ERROR(EmptyDataset, InputError);
WIRERECON_ERROR(NonFiniteLoss, NumericError);

// synthetic
WIRERECON_ERROR(DegenerateAngle, InputError);
WIRERECON_ERROR(OutOfBounds, GeometryError);

// dataset io
WIRERECON_ERROR(ParseError, InputError);
WIRERECON_ERROR(SchemaError, InputError);
WIRERECON_ERROR(InvariantError, InputError);

#undef WIRERECON_ERROR

}  // namespace wirerecon
