#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "dorsiflex/ingest.hpp"
#include "dorsiflex/signal.hpp"

namespace dorsiflex {

/// Shape of a generated corpus: per-subject recordings holding annotated
/// movements from all 28 classes, separated by still gaps.
struct CorpusSpec {
  int subjects = 20;
  int dorsiflexion_per_subject = 15;
  int other_per_subject = 15;
  double noise_std = 0.3;
  double sample_rate_hz = 50.0;
  double gap_s = 0.6;
  std::uint64_t seed = 7;
};

/// One synthetic recording session with its ground truth.
struct Recording {
  std::string subject_id;
  std::vector<SensorSample> samples;
  std::vector<Annotation> annotations;
  std::vector<Segment> segments;  // true movement classes preserved
};

namespace detail {

/// Fixed per-class synthesis profile; instances get seeded jitter on top.
inline SynthesisParams class_profile(int movement_class) {
  SynthesisParams p;
  p.movement_class = movement_class;
  if (movement_class >= 1 && movement_class <= 10) {
    const int step = movement_class - 1;
    p.kind = MovementKind::dorsiflexion;
    p.amplitude = 1.2 + 0.24 * step;
    p.frequency_hz = 1.0 + 0.2 * step;
  } else if (movement_class >= 11 && movement_class <= 18) {
    const int step = movement_class - 11;
    p.kind = MovementKind::rotation;
    p.dominant_axis = movement_class % 2 == 0 ? Axis::y : Axis::z;
    p.amplitude = 1.2 + 0.28 * step;
    p.frequency_hz = 1.0 + 0.25 * step;
  } else if (movement_class >= 19 && movement_class <= 24) {
    const int step = movement_class - 19;
    p.kind = MovementKind::shake;
    p.dominant_axis = static_cast<Axis>(step % 3);
    p.amplitude = 3.0 + 0.8 * step;
    p.frequency_hz = 2.0 + 0.5 * step;
  } else if (movement_class >= 25 && movement_class <= 28) {
    p.kind = MovementKind::still;
    p.amplitude = 0.0;
    p.frequency_hz = 1.0;
  } else {
    throw ParamError("movement class out of range");
  }
  return p;
}

inline std::string subject_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "S%02d", index + 1);
  return buf;
}

inline void append_shifted(std::vector<SensorSample>& out,
                           const std::vector<SensorSample>& samples,
                           double offset) {
  for (SensorSample s : samples) {
    s.t += offset;
    out.push_back(s);
  }
}

}  // namespace detail

/// Deterministically generate the whole corpus. Classes 1-10 alternate with
/// classes 11-28 inside each recording; every movement interval is
/// annotated, gaps are unannotated still noise.
inline std::vector<Recording> build_corpus(const CorpusSpec& spec) {
  if (spec.subjects < 1) throw ParamError("need at least 1 subject");
  if (spec.dorsiflexion_per_subject < 0 || spec.other_per_subject < 0) {
    throw ParamError("per-subject counts must be >= 0");
  }
  if (!(spec.sample_rate_hz > 0.0)) throw ParamError("sample rate must be > 0");
  if (!(spec.gap_s > 0.0)) throw ParamError("gap must be > 0");

  std::vector<Recording> recordings;
  std::uint64_t movement_seed = spec.seed;
  for (int si = 0; si < spec.subjects; ++si) {
    Rng subject_rng(spec.seed * 0x9e3779b97f4a7c15ULL +
                    static_cast<std::uint64_t>(si) + 1);
    const double ability = subject_rng.uniform(0.8, 1.2);

    // Interleaved class list: dorsiflexion classes cycle 1..10, the rest
    // cycle 11..28.
    std::vector<int> classes;
    int d = 0, o = 0;
    while (d < spec.dorsiflexion_per_subject || o < spec.other_per_subject) {
      if (d < spec.dorsiflexion_per_subject) classes.push_back(1 + d++ % 10);
      if (o < spec.other_per_subject) classes.push_back(11 + o++ % 18);
    }

    Recording rec;
    rec.subject_id = detail::subject_name(si);
    double cursor = 0.0;
    for (int movement_class : classes) {
      SynthesisParams gap;
      gap.kind = MovementKind::still;
      gap.movement_class = 25;
      gap.amplitude = 0.0;
      gap.duration_s = spec.gap_s;
      gap.noise_std = spec.noise_std;
      gap.sample_rate_hz = spec.sample_rate_hz;
      gap.subject_id = rec.subject_id;
      gap.seed = ++movement_seed;
      const Segment gap_seg = synthesize(gap);
      detail::append_shifted(rec.samples, gap_seg.samples, cursor);
      cursor += gap_seg.duration_s();

      SynthesisParams p = detail::class_profile(movement_class);
      p.amplitude *= ability * subject_rng.uniform(0.85, 1.15);
      p.frequency_hz *= subject_rng.uniform(0.9, 1.1);
      p.duration_s = subject_rng.uniform(1.6, 2.4);
      p.noise_std = spec.noise_std;
      p.sample_rate_hz = spec.sample_rate_hz;
      p.subject_id = rec.subject_id;
      p.seed = ++movement_seed;
      Segment seg = synthesize(p);

      Annotation a;
      a.start_s = cursor;
      a.end_s = cursor + seg.samples.back().t;
      a.dorsiflexion = seg.is_dorsiflexion();
      rec.annotations.push_back(a);

      detail::append_shifted(rec.samples, seg.samples, cursor);
      cursor += seg.duration_s();

      for (SensorSample& s : seg.samples) s.t += a.start_s;
      rec.segments.push_back(std::move(seg));
    }
    // Trailing gap so no annotation touches the recording end.
    SynthesisParams tail;
    tail.kind = MovementKind::still;
    tail.movement_class = 25;
    tail.amplitude = 0.0;
    tail.duration_s = spec.gap_s;
    tail.noise_std = spec.noise_std;
    tail.sample_rate_hz = spec.sample_rate_hz;
    tail.subject_id = rec.subject_id;
    tail.seed = ++movement_seed;
    detail::append_shifted(rec.samples, synthesize(tail).samples, cursor);

    recordings.push_back(std::move(rec));
  }
  return recordings;
}

/// In-memory dataset with the generator's true movement classes.
inline Dataset corpus_dataset(const std::vector<Recording>& recordings) {
  Dataset ds;
  for (const Recording& rec : recordings) {
    for (const Segment& s : rec.segments) ds.segments.push_back(s);
  }
  return ds;
}

/// Write sensor and annotation CSVs plus a manifest under out_dir.
/// Recordings without any annotated movement are skipped. Returns the
/// manifest path.
inline std::string write_corpus(const std::vector<Recording>& recordings,
                                const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<ManifestEntry> entries;
  for (const Recording& rec : recordings) {
    if (rec.annotations.empty()) continue;
    const std::string sensor_name = "sensor_" + rec.subject_id + ".csv";
    const std::string ann_name = "annotations_" + rec.subject_id + ".csv";
    write_sensor_csv((fs::path(out_dir) / sensor_name).string(), rec.samples);
    write_annotations((fs::path(out_dir) / ann_name).string(),
                      rec.annotations);
    entries.push_back(ManifestEntry{sensor_name, ann_name, rec.subject_id});
  }
  const std::string manifest = (fs::path(out_dir) / "manifest.tsv").string();
  write_manifest(manifest, entries);
  return manifest;
}

/// The last n subject ids of a corpus, the conventional held-out choice.
inline std::vector<std::string> last_subjects(const CorpusSpec& spec, int n) {
  if (n < 0 || n > spec.subjects) throw ParamError("bad test subject count");
  std::vector<std::string> out;
  for (int i = spec.subjects - n; i < spec.subjects; ++i) {
    out.push_back(detail::subject_name(i));
  }
  return out;
}

}  // namespace dorsiflex
