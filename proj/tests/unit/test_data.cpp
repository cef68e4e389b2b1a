#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "lgaze/evaluation.hpp"
#include "lgaze/normalize.hpp"
#include "lgaze/records.hpp"
#include "lgaze/split.hpp"
#include "lgaze/synthetic.hpp"
#include "test_support.hpp"

namespace lgaze {
namespace {

using testing::kind_of;

std::vector<GazeRecord> small_synthetic(int n, std::uint64_t seed) {
  SynthConfig sc;
  sc.n_samples = n;
  sc.seed = seed;
  return generate_synthetic(sc);
}

std::string jsonl_of(std::span<const GazeRecord> records) {
  std::ostringstream os;
  write_records(os, records);
  return os.str();
}

std::vector<GazeRecord> parse(const std::string& text, RecordReadOptions opts = {}) {
  std::istringstream is(text);
  return read_records(is, opts);
}

// Records carrying only a subject id, for split tests.
std::vector<GazeRecord> subject_records(int n_subjects, int per_subject) {
  std::vector<GazeRecord> out;
  for (int s = 1; s <= n_subjects; ++s) {
    for (int k = 0; k < per_subject; ++k) {
      GazeRecord r;
      r.dataset = "toy";
      r.subject = s;
      r.frame = std::to_string(k);
      out.push_back(r);
    }
  }
  return out;
}

std::set<int> subject_set(std::span<const GazeRecord> records) {
  const auto v = subjects_of(records);
  return {v.begin(), v.end()};
}

// Returns the stored label for each sample, looked up by column.
class LabelReader final : public GazeRegressor {
 public:
  explicit LabelReader(Eigen::Matrix3Xd labels) : labels_(std::move(labels)) {}
  FeatureLayout layout() const override { return FeatureLayout::Siamese; }
  Eigen::Matrix3Xd predict(const Eigen::MatrixXd& features) const override {
    EXPECT_EQ(features.cols(), labels_.cols());
    return labels_;
  }
  std::string kind() const override { return "label-reader"; }

 private:
  Eigen::Matrix3Xd labels_;
};

// ---- records ----------------------------------------------------------------

TEST(Records, EmptyInputGivesEmptyList) {
  EXPECT_TRUE(parse("").empty());
  EXPECT_TRUE(parse("\n\n").empty());
}

TEST(Records, WriteReadRoundTripIsBitExact) {
  const auto records = small_synthetic(25, 1);
  const auto back = parse(jsonl_of(records));
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) EXPECT_TRUE(back[i] == records[i]) << i;

  const auto path = std::filesystem::temp_directory_path() / "lgaze_records_test.jsonl";
  save_records(path, records);
  const auto from_file = load_records(path);
  std::filesystem::remove(path);
  EXPECT_TRUE(std::ranges::equal(from_file, records));
}

TEST(Records, WrongLandmarkCountNamesTheLine) {
  const auto records = small_synthetic(3, 2);
  std::vector<nlohmann::json> lines;
  for (const auto& r : records) lines.push_back(record_to_json(r));
  lines[2]["landmarks_norm"].erase(lines[2]["landmarks_norm"].begin());
  std::string text;
  for (const auto& j : lines) text += j.dump() + "\n";
  try {
    parse(text);
    ADD_FAILURE() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Records, StrictFieldValidation) {
  const auto r = small_synthetic(1, 3).front();
  auto unknown = record_to_json(r);
  unknown["mystery"] = 1;
  EXPECT_EQ(kind_of([&] { record_from_json(unknown); }), ErrorKind::InvalidArgument);
  auto nullish = record_to_json(r);
  nullish["landmarks_norm"][4][0] = nullptr;
  EXPECT_EQ(kind_of([&] { record_from_json(nullish); }), ErrorKind::InvalidArgument);
  auto version = record_to_json(r);
  version["schema"] = kRecordSchemaVersion + 1;
  EXPECT_EQ(kind_of([&] { record_from_json(version); }), ErrorKind::SchemaVersionMismatch);
  EXPECT_EQ(kind_of([&] { parse("{not json\n"); }), ErrorKind::ParseError);
  try {
    parse(jsonl_of(std::vector<GazeRecord>{r}) + version.dump() + "\n");
    ADD_FAILURE() << "expected SchemaVersionMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SchemaVersionMismatch);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Records, GazeNormTolerance) {
  const auto r = small_synthetic(1, 4).front();
  auto slightly = record_to_json(r);
  slightly["gaze_norm"] = {0.0, 0.0, -1.0005};
  const GazeRecord fixed = record_from_json(slightly);
  EXPECT_NEAR(fixed.gaze_norm.norm(), 1.0, 1e-15);
  auto far = record_to_json(r);
  far["gaze_norm"] = {0.0, 0.0, -1.01};
  EXPECT_EQ(kind_of([&] { record_from_json(far); }), ErrorKind::InvalidArgument);
}

TEST(Records, RawOnlyInputNeedsRelaxedReader) {
  GazeRecord r = small_synthetic(1, 5).front();
  auto j = record_to_json(r);
  j.erase("landmarks_norm");
  j.erase("gaze_norm");
  EXPECT_EQ(kind_of([&] { record_from_json(j); }), ErrorKind::InvalidArgument);
  const GazeRecord raw_only = record_from_json(j, RecordReadOptions{false});
  EXPECT_FALSE(raw_only.normalized);
  ASSERT_TRUE(raw_only.raw.has_value());
  EXPECT_EQ(kind_of([&] {
              make_labeled_features(std::vector<GazeRecord>{raw_only}, FeatureLayout::Global);
            }),
            ErrorKind::EmptyData);
}

TEST(Records, PoseAndIntrinsicsJson) {
  Rng rng(6);
  const HeadPose p = testing::random_head_pose(rng);
  const HeadPose back = pose_from_json(pose_to_json(p));
  EXPECT_EQ(back.rotation, p.rotation);
  EXPECT_EQ(back.translation, p.translation);
  const CameraIntrinsics k{900, 910, 300.5, 200.25};
  const CameraIntrinsics kb = intrinsics_from_json(intrinsics_to_json(k));
  EXPECT_EQ(kb.fx, k.fx);
  EXPECT_EQ(kb.cy, k.cy);
}

// ---- split --------------------------------------------------------------------

TEST(Split, DefaultRangesOnFiftySixSubjects) {
  const auto records = subject_records(56, 3);
  const SplitResult s = split_records(records, SplitSpec{});
  std::set<int> train, val, test;
  for (int i = 1; i <= 46; ++i) train.insert(i);
  for (int i = 47; i <= 51; ++i) val.insert(i);
  for (int i = 52; i <= 56; ++i) test.insert(i);
  EXPECT_EQ(subject_set(s.train), train);
  EXPECT_EQ(subject_set(s.val), val);
  EXPECT_EQ(subject_set(s.test), test);
  EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), records.size());
}

TEST(Split, RandomBySubjectEightyGivesSixtyFourEightEight) {
  const auto records = subject_records(80, 2);
  SplitSpec spec;
  spec.mode = SplitMode::RandomBySubject;
  spec.seed = 9;
  const SplitResult by_fraction = split_records(records, spec);
  EXPECT_EQ(subject_set(by_fraction.train).size(), 64u);
  EXPECT_EQ(subject_set(by_fraction.val).size(), 8u);
  EXPECT_EQ(subject_set(by_fraction.test).size(), 8u);
  spec.train_count = 64;
  spec.val_count = 8;
  spec.test_count = 8;
  const SplitResult by_count = split_records(records, spec);
  EXPECT_EQ(subject_set(by_count.train).size(), 64u);
  EXPECT_EQ(subject_set(by_count.test).size(), 8u);
}

TEST(Split, SubjectsNeverStraddleAndSeedIsDeterministic) {
  const auto records = subject_records(30, 4);
  SplitSpec spec;
  spec.mode = SplitMode::RandomBySubject;
  spec.seed = 1;
  const SplitResult a = split_records(records, spec);
  const SplitResult b = split_records(records, spec);
  spec.seed = 2;
  const SplitResult c = split_records(records, spec);
  const auto tr = subject_set(a.train), va = subject_set(a.val), te = subject_set(a.test);
  for (int s : va) EXPECT_FALSE(tr.contains(s) || te.contains(s));
  for (int s : te) EXPECT_FALSE(tr.contains(s));
  for (const auto& r : a.train) EXPECT_TRUE(tr.contains(r.subject));
  EXPECT_EQ(subject_set(b.test), te);
  EXPECT_TRUE(subject_set(c.test) != te || subject_set(c.val) != va);
}

TEST(Split, SubjectListsAndErrors) {
  const auto records = subject_records(10, 2);
  SplitSpec spec;
  spec.mode = SplitMode::SubjectLists;
  spec.train_subjects = {1, 2, 3, 4, 5};
  spec.val_subjects = {6};
  spec.test_subjects = {7, 8};
  const SplitResult s = split_records(records, spec);
  EXPECT_EQ(s.train.size(), 10u);
  EXPECT_EQ(s.val.size(), 2u);
  EXPECT_EQ(s.test.size(), 4u);
  spec.test_subjects = {42};
  EXPECT_EQ(kind_of([&] { split_records(records, spec); }), ErrorKind::EmptySplitProduced);
  spec.test_subjects = {6};
  EXPECT_EQ(kind_of([&] { spec.validate(); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { split_records(records, SplitSpec{}); }), ErrorKind::EmptySplitProduced);
}

TEST(Split, JsonRoundTrip) {
  SplitSpec spec;
  spec.mode = SplitMode::RandomBySubject;
  spec.val_fraction = 0.2;
  spec.seed = 77;
  EXPECT_EQ(SplitSpec::from_json(spec.to_json()).to_json(), spec.to_json());
  EXPECT_EQ(split_mode_from_string("file-list"), SplitMode::SubjectLists);
  EXPECT_EQ(kind_of([] { SplitSpec::from_json({{"mode", "subject-ranges"}, {"bogus", 1}}); }),
            ErrorKind::InvalidArgument);
}

// ---- normalization ------------------------------------------------------------

TEST(Normalize, CanonicalPoseLeavesLandmarksUnchanged) {
  const NormalizedCamera cam;
  const HeadPose pose{Mat3::Identity(), Vec3(0, 0, cam.distance_mm)};
  const LandmarkSet raw = testing::project_model(CanonicalFaceModel::default_model(), pose, cam.intrinsics);
  NormalizeOptions opts;
  opts.pose_source = PoseSource::Provided;
  const NormalizationResult r = normalize_landmarks(raw, cam.intrinsics, opts, pose);
  EXPECT_LT((r.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT((r.warp - Mat3::Identity()).norm(), 1e-12);
  for (std::size_t s = 0; s < kNumLandmarks; ++s) EXPECT_LT((r.landmarks[s] - raw[s]).norm(), 1e-9);
}

TEST(Normalize, ArbitraryPoseCentersHeadAndPreservesGaze) {
  SynthConfig sc;
  sc.n_samples = 100;
  sc.seed = 7;
  for (const auto& rec : generate_synthetic(sc)) {
    NormalizationResult d;
    NormalizeOptions opts;
    opts.pose_source = PoseSource::ProvidedAsInit;
    const GazeRecord n = normalize_record(rec, opts, &d);
    EXPECT_LT((d.rotation * d.pose.translation.normalized() - Vec3(0, 0, 1)).norm(), 1e-6);
    EXPECT_NEAR(n.gaze_norm.norm(), 1.0, 1e-12);
    EXPECT_NEAR(rec.raw->gaze->norm(), 1.0, 1e-12);
    EXPECT_LT((n.gaze_norm - d.rotation * *rec.raw->gaze).norm(), 1e-12);
  }
}

TEST(Normalize, ProvidedAsInitNeverWorseThanProvided) {
  SynthConfig sc;
  sc.n_samples = 60;
  sc.pixel_noise_px = 1.0;
  sc.seed = 8;
  const NormalizeOptions base;
  for (const auto& rec : generate_synthetic(sc)) {
    const HeadPose provided = *rec.raw->head_pose;
    NormalizeOptions opts;
    opts.pose_source = PoseSource::ProvidedAsInit;
    NormalizationResult d;
    normalize_record(rec, opts, &d);
    EXPECT_LE(d.rms_residual,
              reprojection_rms(rec.raw->landmarks, base.model, rec.raw->intrinsics, provided) + 1e-12);
  }
}

TEST(Normalize, SolveMatchesGeneratorWithoutJitter) {
  SynthConfig sc;
  sc.n_samples = 50;
  sc.shape_jitter_mm = 0.0;
  sc.pose_source = PoseSource::Solve;
  sc.seed = 9;
  for (const auto& rec : generate_synthetic(sc)) {
    NormalizeOptions opts;
    opts.pose_source = PoseSource::Solve;
    NormalizationResult d;
    normalize_record(rec, opts, &d);
    EXPECT_LT(rad2deg(rotation_angle_between(d.pose.rotation, rec.pose_gt->rotation)), 0.1);
  }
}

TEST(Normalize, MissingInputsAreRejected) {
  GazeRecord r = small_synthetic(1, 10).front();
  GazeRecord no_raw = r;
  no_raw.raw.reset();
  EXPECT_EQ(kind_of([&] { normalize_record(no_raw, NormalizeOptions{}); }), ErrorKind::InvalidArgument);
  GazeRecord no_pose = r;
  no_pose.raw->head_pose.reset();
  NormalizeOptions provided;
  provided.pose_source = PoseSource::Provided;
  EXPECT_EQ(kind_of([&] { normalize_record(no_pose, provided); }), ErrorKind::InvalidArgument);
  EXPECT_NO_THROW(normalize_record(no_pose, NormalizeOptions{}));
  EXPECT_EQ(pose_source_from_string("provided-as-init"), PoseSource::ProvidedAsInit);
}

// ---- synthetic generator --------------------------------------------------------

TEST(Synthetic, GazeAtCameraPutsPupilOnEyeballRay) {
  SynthConfig sc;
  sc.seed = 11;
  const SubjectShape shape = subject_shape(sc, 0);
  const HeadPose pose{Mat3::Identity(), Vec3(0, 0, 600)};
  for (int eye = 0; eye < 2; ++eye) {
    const Vec3 center_cam = pose.rotation * shape.eyeball_center[static_cast<std::size_t>(eye)] + pose.translation;
    const Vec3 gaze_head = pose.rotation.transpose() * (-center_cam.normalized());
    const auto pts = face_points(shape, gaze_head, sc);
    const std::size_t pupil = (eye == 0 ? slot::kLeftEyeBegin : slot::kRightEyeBegin) + slot::kIrisCenter;
    const Vec2 a = project(sc.camera, pose.rotation * pts[pupil] + pose.translation);
    const Vec2 b = project(sc.camera, center_cam);
    EXPECT_LT((a - b).norm(), 1e-6);
  }
}

TEST(Synthetic, IrisPointsLieOnEyeballSphere) {
  SynthConfig sc;
  const SubjectShape shape = subject_shape(sc, 3);
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    const Vec3 g = pitchyaw_to_vector(uniform(rng, -0.4, 0.4), uniform(rng, -0.5, 0.5));
    const auto pts = face_points(shape, g, sc);
    for (std::size_t k = 0; k < 5; ++k) {
      EXPECT_NEAR((pts[slot::kLeftEyeBegin + k] - shape.eyeball_center[0]).norm(), sc.eyeball_radius_mm, 1e-9);
      EXPECT_NEAR((pts[slot::kRightEyeBegin + k] - shape.eyeball_center[1]).norm(), sc.eyeball_radius_mm, 1e-9);
    }
    // The pupil sits on the gaze ray from the eyeball center.
    const Vec3 dir = (pts[slot::kLeftEyeBegin] - shape.eyeball_center[0]).normalized();
    EXPECT_LT((dir - g.normalized()).norm(), 1e-12);
  }
}

TEST(Synthetic, DeterministicAndOrderIndependent) {
  const auto a = small_synthetic(60, 13);
  const auto b = small_synthetic(60, 13);
  const auto c = small_synthetic(30, 13);
  const auto d = small_synthetic(60, 14);
  EXPECT_TRUE(std::ranges::equal(a, b));
  EXPECT_TRUE(std::equal(c.begin(), c.end(), a.begin()));
  EXPECT_FALSE(a.front() == d.front());
}

TEST(Synthetic, RecordsAreValidAndInsideTheImage) {
  SynthConfig sc;
  sc.n_samples = 200;
  sc.pixel_noise_px = 1.0;
  sc.seed = 15;
  const auto records = generate_synthetic(sc);
  ASSERT_EQ(records.size(), 200u);
  for (const auto& r : records) {
    EXPECT_NEAR(r.gaze_norm.norm(), 1.0, 1e-12);
    EXPECT_GE(r.subject, sc.first_subject);
    EXPECT_LT(r.subject, sc.first_subject + sc.n_subjects);
    for (const auto& p : r.raw->landmarks.points) {
      EXPECT_GE(p.x(), 0.0);
      EXPECT_LE(p.x(), sc.image_width);
      EXPECT_GE(p.y(), 0.0);
      EXPECT_LE(p.y(), sc.image_height);
    }
  }
  // Every record passes load-time validation.
  EXPECT_EQ(parse(jsonl_of(records)).size(), records.size());
}

TEST(Synthetic, PipelineClosureWithLabelReader) {
  SynthConfig sc;
  sc.n_samples = 100;
  sc.seed = 16;
  std::vector<GazeRecord> renormalized;
  for (const auto& r : generate_synthetic(sc)) renormalized.push_back(normalize_record(r, NormalizeOptions{}));
  const LabeledFeatures data = make_labeled_features(renormalized, FeatureLayout::Siamese);
  const LabelReader cheat(data.targets);
  const EvalReport rep = evaluate(cheat, data);
  EXPECT_EQ(rep.mae_deg, 0.0);
  EXPECT_EQ(rep.n, 100u);
}

TEST(Synthetic, RejectionLimit) {
  SynthConfig sc;
  sc.n_samples = 3;
  sc.image_width = 20;
  sc.image_height = 20;
  sc.max_rejections = 5;
  EXPECT_EQ(kind_of([&] { generate_synthetic(sc); }), ErrorKind::RejectionLimit);
}

TEST(Synthetic, ConfigJsonAndValidation) {
  SynthConfig sc;
  sc.n_samples = 42;
  sc.gaze_yaw_deg = {-10, 12};
  sc.seed = 3;
  const SynthConfig back = SynthConfig::from_json(sc.to_json());
  EXPECT_EQ(back.to_json(), sc.to_json());
  EXPECT_EQ(SynthConfig::from_json({{"n_samples", 5}}).n_samples, 5);
  EXPECT_EQ(kind_of([] { SynthConfig::from_json({{"bogus", 1}}); }), ErrorKind::InvalidArgument);
  SynthConfig bad;
  bad.head_yaw_deg = {10, -10};
  EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::InvalidArgument);
  bad = SynthConfig{};
  bad.pixel_noise_px = -1;
  EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::InvalidArgument);
}

}  // namespace
}  // namespace lgaze
