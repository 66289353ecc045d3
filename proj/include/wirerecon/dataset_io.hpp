#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "wirerecon/calibration.hpp"
#include "wirerecon/curve_repr.hpp"
#include "wirerecon/frame.hpp"
#include "wirerecon/types.hpp"

namespace wirerecon::io {

/// One annotated polyline of one view of one frame.
struct AnnotationRecord {
    int frame_index = 0;
    char view_id = 'A';  // 'A' or 'B'
    std::vector<Vec2> polyline;
};

/// One video's annotation file content.
struct VideoAnnotations {
    std::string video_id;
    std::string guidewire_type;  // "angled" | "straight"
    bool fluid = false;
    std::array<int, 2> resolution{1024, 1024};
    std::vector<AnnotationRecord> records;  // sorted by (frame_index, view_id)
};

/// Parses and validates a video annotation file; records come back sorted.
VideoAnnotations load_annotations(const std::string& path);
void save_annotations(const VideoAnnotations& va, const std::string& path);

struct ManifestEntry {
    std::string video_id;
    std::string guidewire_type;
    bool fluid = false;
    int frame_count = 0;
    std::string annotation_path;
    std::string camera_bundle_path;  // prefix; _A.json/_B.json appended per view
};

struct Manifest {
    std::vector<ManifestEntry> videos;
};

Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& manifest, const std::string& path);

/// Checks unique video ids and (optionally) that referenced paths exist.
void validate_manifest(const Manifest& manifest, const std::string& base_dir,
                       bool check_paths = true);

/// Frame counts per guidewire-type x fluid cell plus totals.
struct CompositionStats {
    int angled_fluid = 0;
    int angled_dry = 0;
    int straight_fluid = 0;
    int straight_dry = 0;

    int total() const { return angled_fluid + angled_dry + straight_fluid + straight_dry; }
    int angled() const { return angled_fluid + angled_dry; }
    int straight() const { return straight_fluid + straight_dry; }
    int fluid() const { return angled_fluid + straight_fluid; }
    int dry() const { return angled_dry + straight_dry; }
};

CompositionStats manifest_stats(const Manifest& manifest);

/// Camera bundle round trip (K, R, t, P plus the optional LWM field).
struct CameraBundle {
    std::string view_id;
    CameraParameters camera;
};

CameraBundle load_camera_bundle(const std::string& path);
void save_camera_bundle(const CameraBundle& bundle, const std::string& path);

/// Calibration correspondence file (undistortion pairs and/or 3D-2D marker
/// correspondences for one view).
struct CorrespondenceFile {
    std::string view_id;
    std::vector<calib::Correspondence2D2D> undistortion;
    std::vector<calib::Correspondence3D2D> projection;
};

CorrespondenceFile load_correspondences(const std::string& path);
void save_correspondences(const CorrespondenceFile& file, const std::string& path);

/// Ground-truth / reconstructed curve files: {"frame": n, "points": [[x,y,z],...]}.
struct CurveRecord {
    int frame = 0;
    Curve3D curve;
};

std::vector<CurveRecord> load_curves(const std::string& path);
void save_curves(const std::vector<CurveRecord>& curves, const std::string& path);

/// Single-record variant (one {"frame", "points"} object per file).
CurveRecord load_curve(const std::string& path);
void save_curve(const CurveRecord& record, const std::string& path);

/// Model predictions in the offset representation:
/// [{"frame", "tip":[x,y,z], "r", "offsets":[[dtheta,dphi],...]}, ...].
struct SphericalCurveRecord {
    int frame = 0;
    repr::SphericalCurve curve;
};

std::vector<SphericalCurveRecord> load_spherical_curves(const std::string& path);
void save_spherical_curves(const std::vector<SphericalCurveRecord>& records,
                           const std::string& path);

/// 8-bit binary PGM round trip for rendered frames.
void save_pgm(const FrameTensor& frame, const std::string& path);
FrameTensor load_pgm(const std::string& path);

}  // namespace wirerecon::io
