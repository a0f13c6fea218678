#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "dorsiflex/error.hpp"
#include "dorsiflex/signal.hpp"
#include "dorsiflex/text.hpp"

namespace dorsiflex {

/// A time interval of one annotated movement inside a recording.
struct Annotation {
  double start_s = 0.0;
  double end_s = 0.0;
  bool dorsiflexion = false;
};

inline constexpr const char* kSensorCsvHeader = "t,ax,ay,az,gx,gy,gz";
inline constexpr const char* kAnnotationCsvHeader = "start_s,end_s,label";
inline constexpr const char* kDorsiflexionLabel = "dorsiflexion";
inline constexpr const char* kOtherLabel = "other";

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

}  // namespace detail

inline std::vector<SensorSample> read_sensor_csv(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kSensorCsvHeader) {
    throw ParseError(path + ":1: expected header '" +
                     std::string(kSensorCsvHeader) + "'");
  }
  std::vector<SensorSample> samples;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (cells.size() != 7) {
      throw ParseError(ctx + ": expected 7 columns, got " +
                       std::to_string(cells.size()));
    }
    SensorSample s;
    s.t = parse_double(cells[0], ctx);
    s.ax = parse_double(cells[1], ctx);
    s.ay = parse_double(cells[2], ctx);
    s.az = parse_double(cells[3], ctx);
    s.gx = parse_double(cells[4], ctx);
    s.gy = parse_double(cells[5], ctx);
    s.gz = parse_double(cells[6], ctx);
    if (!samples.empty() && s.t <= samples.back().t) {
      throw ParseError(ctx + ": timestamps must be strictly increasing");
    }
    samples.push_back(s);
  }
  return samples;
}

inline void write_sensor_csv(const std::string& path,
                             const std::vector<SensorSample>& samples) {
  std::ofstream out = detail::open_output(path);
  out << kSensorCsvHeader << '\n';
  for (const SensorSample& s : samples) {
    out << format_double(s.t) << ',' << format_double(s.ax) << ','
        << format_double(s.ay) << ',' << format_double(s.az) << ','
        << format_double(s.gx) << ',' << format_double(s.gy) << ','
        << format_double(s.gz) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<Annotation> read_annotations(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kAnnotationCsvHeader) {
    throw ParseError(path + ":1: expected header '" +
                     std::string(kAnnotationCsvHeader) + "'");
  }
  std::vector<Annotation> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (cells.size() != 3) {
      throw ParseError(ctx + ": expected 3 columns, got " +
                       std::to_string(cells.size()));
    }
    Annotation a;
    a.start_s = parse_double(cells[0], ctx);
    a.end_s = parse_double(cells[1], ctx);
    const std::string_view label = trim(cells[2]);
    if (label == kDorsiflexionLabel) {
      a.dorsiflexion = true;
    } else if (label == kOtherLabel) {
      a.dorsiflexion = false;
    } else {
      throw ParseError(ctx + ": label must be '" +
                       std::string(kDorsiflexionLabel) + "' or '" +
                       std::string(kOtherLabel) + "'");
    }
    if (!(a.start_s >= 0.0) || !(a.start_s < a.end_s)) {
      throw ParseError(ctx + ": need 0 <= start_s < end_s");
    }
    out.push_back(a);
  }
  return out;
}

inline void write_annotations(const std::string& path,
                              const std::vector<Annotation>& annotations) {
  std::ofstream out = detail::open_output(path);
  out << kAnnotationCsvHeader << '\n';
  for (const Annotation& a : annotations) {
    out << format_double(a.start_s) << ',' << format_double(a.end_s) << ','
        << (a.dorsiflexion ? kDorsiflexionLabel : kOtherLabel) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

namespace detail {

/// Cut annotated intervals out of a sample stream. Interval bounds are
/// checked against the recording span; each cut must keep >= 2 samples.
inline std::vector<Segment> slice_annotations(
    const std::vector<SensorSample>& samples,
    const std::vector<Annotation>& annotations, const std::string& subject_id,
    double sample_rate_hz) {
  std::vector<Segment> segments;
  if (annotations.empty()) return segments;
  if (samples.size() < 2) {
    throw RangeError("recording for subject " + subject_id +
                     " has fewer than 2 samples");
  }
  const double t_begin = samples.front().t;
  const double t_end = samples.back().t;
  for (const Annotation& a : annotations) {
    if (a.start_s < t_begin || a.end_s > t_end) {
      throw RangeError("annotation [" + format_double(a.start_s) + ", " +
                       format_double(a.end_s) + "] outside recording span [" +
                       format_double(t_begin) + ", " + format_double(t_end) +
                       "]");
    }
    Segment seg;
    seg.subject_id = subject_id;
    seg.movement_class = a.dorsiflexion ? 1 : kLastDorsiflexionClass + 1;
    for (const SensorSample& s : samples) {
      if (s.t >= a.start_s && s.t <= a.end_s) seg.samples.push_back(s);
    }
    if (seg.samples.size() < 2) {
      throw RangeError("annotation [" + format_double(a.start_s) + ", " +
                       format_double(a.end_s) +
                       "] covers fewer than 2 samples");
    }
    seg.sample_rate_hz =
        sample_rate_hz > 0.0
            ? sample_rate_hz
            : static_cast<double>(seg.samples.size() - 1) /
                  (seg.samples.back().t - seg.samples.front().t);
    validate_segment(seg);
    segments.push_back(std::move(seg));
  }
  return segments;
}

}  // namespace detail

/// Read one recording plus its annotation file and return one labeled
/// segment per annotation. The segment sample rate is inferred from the
/// annotated samples' timestamps.
inline std::vector<Segment> read_recording(const std::string& sensor_path,
                                           const std::string& annotation_path,
                                           const std::string& subject_id) {
  const std::vector<SensorSample> samples = read_sensor_csv(sensor_path);
  const std::vector<Annotation> annotations = read_annotations(annotation_path);
  return detail::slice_annotations(samples, annotations, subject_id, 0.0);
}

struct Dataset {
  std::vector<Segment> segments;

  std::set<std::string> subjects() const {
    std::set<std::string> out;
    for (const Segment& s : segments) out.insert(s.subject_id);
    return out;
  }
};

struct SplitDataset {
  Dataset train;
  Dataset test;
};

/// Route every segment by subject: a subject's data lands entirely in one
/// partition. The test subject list must be non-empty, known, and must not
/// swallow the whole dataset.
inline SplitDataset split_by_subject(
    const Dataset& dataset, const std::vector<std::string>& test_subjects) {
  if (test_subjects.empty()) throw ParamError("no test subjects given");
  const std::set<std::string> all = dataset.subjects();
  std::set<std::string> test_set;
  for (const std::string& s : test_subjects) {
    if (!all.count(s)) throw ParamError("unknown test subject: " + s);
    test_set.insert(s);
  }
  if (test_set.size() == all.size()) {
    throw ParamError("every subject is a test subject; training set empty");
  }
  SplitDataset split;
  for (const Segment& seg : dataset.segments) {
    (test_set.count(seg.subject_id) ? split.test : split.train)
        .segments.push_back(seg);
  }
  return split;
}

struct ManifestEntry {
  std::string sensor_file;
  std::string annotation_file;
  std::string subject_id;
};

/// Manifest: one tab-separated (sensor_file, annotation_file, subject_id)
/// triple per line. Relative paths resolve against the manifest directory.
inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  const std::filesystem::path base =
      std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, '\t');
    if (cells.size() != 3) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 3 tab-separated fields");
    }
    ManifestEntry e;
    auto resolve = [&](std::string_view p) {
      std::filesystem::path fp{std::string(trim(p))};
      return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    e.sensor_file = resolve(cells[0]);
    e.annotation_file = resolve(cells[1]);
    e.subject_id = std::string(trim(cells[2]));
    if (e.subject_id.empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": empty subject id");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

inline void write_manifest(const std::string& path,
                           const std::vector<ManifestEntry>& entries) {
  std::ofstream out = detail::open_output(path);
  for (const ManifestEntry& e : entries) {
    out << e.sensor_file << '\t' << e.annotation_file << '\t' << e.subject_id
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline Dataset load_dataset(const std::string& manifest_path) {
  Dataset ds;
  for (const ManifestEntry& e : read_manifest(manifest_path)) {
    std::vector<Segment> segs =
        read_recording(e.sensor_file, e.annotation_file, e.subject_id);
    for (Segment& s : segs) ds.segments.push_back(std::move(s));
  }
  return ds;
}

}  // namespace dorsiflex
