#include <catch2/catch_amalgamated.hpp>

#include "bopask/grasp_synth.hpp"
#include "bopask/synth_scenes.hpp"

using namespace bopask;

namespace {

TriMesh make_sphere_mesh(double diameter, int rings = 16, int sectors = 32) {
    TriMesh m;
    const double r = diameter / 2;
    for (int i = 0; i <= rings; ++i) {
        const double phi = M_PI * i / rings;
        for (int j = 0; j < sectors; ++j) {
            const double theta = 2 * M_PI * j / sectors;
            m.vertices.push_back({r * std::sin(phi) * std::cos(theta),
                                  r * std::sin(phi) * std::sin(theta),
                                  r * std::cos(phi)});
        }
    }
    auto idx = [&](int i, int j) { return i * sectors + (j % sectors); };
    for (int i = 0; i < rings; ++i)
        for (int j = 0; j < sectors; ++j) {
            m.faces.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
            m.faces.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
        }
    return m;
}

Cuboid3D box_at(const Vec3& center, const Vec3& size) {
    Cuboid3D c;
    c.pose.translation = center;
    c.half_extents = size * 0.5;
    return c;
}

TriMesh mesh_at(const Vec3& size, const Vec3& center) {
    TriMesh m = make_box_mesh(size);
    for (Vec3& v : m.vertices) v += center;
    return m;
}

// Point-in-OBB, written independently of the SAT path.
bool point_in_cuboid(const Vec3& p, const Cuboid3D& c) {
    const Vec3 local = c.pose.rotation.transpose() * (p - c.pose.translation);
    return std::abs(local.x()) <= c.half_extents.x() &&
           std::abs(local.y()) <= c.half_extents.y() &&
           std::abs(local.z()) <= c.half_extents.z();
}

// Monte-Carlo re-validation: sample the gripper volume, require every point
// outside every inflated obstacle.
bool volume_disjoint_mc(const Grasp& g, const std::vector<GraspObstacle>& obstacles,
                        const GraspParams& params, std::uint64_t seed) {
    Rng rng(seed);
    for (const Cuboid3D& vol : gripper_volumes(g.pose, g.width, params)) {
        for (int s = 0; s < 300; ++s) {
            const Vec3 local(rng.uniform(-vol.half_extents.x(), vol.half_extents.x()),
                             rng.uniform(-vol.half_extents.y(), vol.half_extents.y()),
                             rng.uniform(-vol.half_extents.z(), vol.half_extents.z()));
            const Vec3 p = vol.pose.apply(local);
            for (const GraspObstacle& o : obstacles)
                if (point_in_cuboid(p, o.cuboid.inflated(params.inflation)))
                    return false;
        }
    }
    return true;
}

std::vector<GraspObstacle> ring_obstacles(bool drop_east) {
    // mirrors the ring_clutter fixture: bars at +-45 around a 40 mm cube
    std::vector<GraspObstacle> obs;
    obs.push_back({1, box_at({0, 45, 60}, {160, 40, 120})});
    obs.push_back({2, box_at({0, -45, 60}, {160, 40, 120})});
    if (!drop_east) obs.push_back({3, box_at({45, 0, 60}, {40, 40, 120})});
    obs.push_back({4, box_at({-45, 0, 60}, {40, 40, 120})});
    return obs;
}

}  // namespace

TEST_CASE("antipodal sampling on a 40 mm box with an 80 mm gripper") {
    GraspParams params;
    params.max_width = 80;
    params.surface_samples = 400;
    const TriMesh box = mesh_at({40, 40, 40}, {0, 0, 20});
    const auto candidates = sample_antipodal_grasps(box, params, 11);
    REQUIRE_FALSE(candidates.empty());
    for (const Grasp& g : candidates) {
        // face-pair oracle: every antipodal pair of a cube spans one of its
        // extents, so the width is the box width
        CHECK(g.width == Catch::Approx(40.0).margin(1e-6));
        CHECK(g.quality == Catch::Approx(1.0).margin(1e-9));
        // closing axis perpendicular to a face pair
        const Vec3 axis = g.pose.rotation.col(0);
        CHECK(axis.cwiseAbs().maxCoeff() == Catch::Approx(1.0).margin(1e-9));
        // stored contacts satisfy the antipodal property within the cone
        const Vec3 line = (g.contact2 - g.contact1).normalized();
        CHECK((-g.normal1).dot(g.normal2) >= std::cos(deg2rad(params.friction_cone_deg)));
        CHECK(g.normal1.dot(-line) >= std::cos(deg2rad(params.friction_cone_deg)));
        // proper rotation
        CHECK(g.pose.is_orthonormal(1e-9));
    }
}

TEST_CASE("a 120 mm sphere exceeds an 80 mm gripper") {
    GraspParams params;
    params.max_width = 80;
    params.surface_samples = 300;
    const TriMesh sphere = make_sphere_mesh(120);
    CHECK_THROWS_AS(sample_antipodal_grasps(sphere, params, 3), GraspError);
}

TEST_CASE("thin plate is dominated by pinches across its thickness") {
    GraspParams params;
    params.surface_samples = 500;
    const TriMesh plate = mesh_at({100, 80, 6}, {0, 0, 3});
    const auto candidates = sample_antipodal_grasps(plate, params, 19);
    REQUIRE_FALSE(candidates.empty());
    int thin = 0;
    for (const Grasp& g : candidates) {
        // width oracle: face pairs of the plate measure 6, 80, or 100; only
        // 6 and 80 fit the 85 mm gripper
        CHECK((std::abs(g.width - 6) < 1e-6 || std::abs(g.width - 80) < 1e-6));
        if (g.width < 10) ++thin;
    }
    CHECK(thin > static_cast<int>(candidates.size()) * 7 / 10);
}

TEST_CASE("filter_and_rank keeps top-k on an isolated box") {
    GraspParams params;
    params.surface_samples = 600;
    const Cuboid3D target = box_at({0, 0, 20}, {40, 40, 40});
    const TriMesh mesh = mesh_at({40, 40, 40}, {0, 0, 20});
    auto candidates = sample_antipodal_grasps(mesh, params, 23);
    const auto result = filter_and_rank(std::move(candidates), target, {}, 0, params, 5);
    CHECK(result.grasps.size() == 5);
    CHECK_FALSE(result.clutter.fully_cluttered);
    CHECK(result.clutter.blockers.empty());
    for (std::size_t i = 1; i < result.grasps.size(); ++i)
        CHECK(result.grasps[i - 1].quality >= result.grasps[i].quality);
}

TEST_CASE("ring of bars makes the target fully cluttered; removing one frees it") {
    GraspParams params;
    const Cuboid3D target = box_at({0, 0, 20}, {40, 40, 40});
    const TriMesh mesh = mesh_at({40, 40, 40}, {0, 0, 20});
    auto candidates = sample_antipodal_grasps(mesh, params, 29);

    const auto ringed =
        filter_and_rank(candidates, target, ring_obstacles(false), 0, params, 5);
    CHECK(ringed.grasps.empty());
    CHECK(ringed.clutter.fully_cluttered);
    CHECK_FALSE(ringed.clutter.blockers.empty());
    for (int b : ringed.clutter.blockers) CHECK((b >= 1 && b <= 4));

    const auto freed =
        filter_and_rank(candidates, target, ring_obstacles(true), 0, params, 5);
    CHECK_FALSE(freed.clutter.fully_cluttered);
    CHECK_FALSE(freed.grasps.empty());
    for (const Grasp& g : freed.grasps)
        CHECK(volume_disjoint_mc(g, ring_obstacles(true), params, 7));
}

TEST_CASE("fully_cluttered is monotone under added obstacles") {
    GraspParams params;
    const Cuboid3D target = box_at({0, 0, 20}, {40, 40, 40});
    const TriMesh mesh = mesh_at({40, 40, 40}, {0, 0, 20});
    auto candidates = sample_antipodal_grasps(mesh, params, 31);

    auto obs = ring_obstacles(false);
    const auto before = filter_and_rank(candidates, target, obs, 0, params, 5);
    REQUIRE(before.clutter.fully_cluttered);
    obs.push_back({9, box_at({0, 0, 160}, {300, 300, 30})});  // lid on top
    const auto after = filter_and_rank(candidates, target, obs, 0, params, 5);
    CHECK(after.clutter.fully_cluttered);
}

TEST_CASE("one remaining free grasp direction defeats the clutter label") {
    GraspParams params;
    const Cuboid3D target = box_at({0, 0, 20}, {40, 40, 40});
    const TriMesh mesh = mesh_at({40, 40, 40}, {0, 0, 20});
    auto candidates = sample_antipodal_grasps(mesh, params, 37);
    // only east and west bars: closing across y plus a top-down approach
    // stays free
    std::vector<GraspObstacle> obs = {{3, box_at({45, 0, 60}, {40, 40, 120})},
                                      {4, box_at({-45, 0, 60}, {40, 40, 120})}};
    const auto result = filter_and_rank(std::move(candidates), target, obs, 0, params, 5);
    CHECK_FALSE(result.clutter.fully_cluttered);
    CHECK_FALSE(result.grasps.empty());
}

TEST_CASE("grasp_to_points2d geometry") {
    WorldTransform world;  // identity: world == camera frame
    CameraIntrinsics k;
    k.fx = k.fy = 500;
    k.cx = 320;
    k.cy = 240;
    k.width = 640;
    k.height = 480;

    Grasp g;
    g.width = 64;  // projects to an integral +-8 px about the center
    g.pose.translation = {0, 0, 2000};  // on the camera axis
    // closing axis along camera x, approach along camera y (image down)
    g.pose.rotation.col(0) = Vec3(1, 0, 0);
    g.pose.rotation.col(2) = Vec3(0, 1, 0);
    g.pose.rotation.col(1) = Vec3(0, 1, 0).cross(Vec3(1, 0, 0));

    SECTION("center at principal point, bases symmetric") {
        const auto pts = grasp_to_points2d(g, world, k, 45);
        CHECK(pts[0].u == 320);
        CHECK(pts[0].v == 240);
        CHECK(pts[1].u + pts[2].u == 2 * 320);
        CHECK(pts[1].v == pts[2].v);
        // pixel distance between bases = fx * width / z
        const double d = std::hypot(pts[1].u - pts[2].u, pts[1].v - pts[2].v);
        CHECK(d == Catch::Approx(500.0 * 64 / 2000).margin(1.0));
        // left finger has the smaller u
        CHECK(pts[1].u <= pts[2].u);
        CHECK(pts[3].u <= pts[4].u);
    }

    SECTION("zero finger length collapses tips onto bases") {
        const auto pts = grasp_to_points2d(g, world, k, 0);
        CHECK(pts[1].u == pts[3].u);
        CHECK(pts[1].v == pts[3].v);
        CHECK(pts[2].u == pts[4].u);
        CHECK(pts[2].v == pts[4].v);
    }
}

TEST_CASE("grasp answer serialization matches the five-point format") {
    std::array<PixelPoint, 5> pts = {{{677, 349}, {693, 367}, {664, 332},
                                      {704, 407}, {674, 370}}};
    CHECK(grasp_answer_string(pts) ==
          "<points x=\"677\" y=\"349\">Grasp center</points>"
          "<points x=\"693\" y=\"367\">Left finger base</points>"
          "<points x=\"664\" y=\"332\">Right finger base</points>"
          "<points x=\"704\" y=\"407\">Left finger tip</points>"
          "<points x=\"674\" y=\"370\">Right finger tip</points>");
}

TEST_CASE("synthesize_grasps end to end on the ring fixture") {
    const SynthSpec spec = standard_fixture("ring_clutter");
    const ModelTable models = synth_model_table(spec);
    const SynthFrameResult r = render_frame(spec, models, 0);
    const auto cuboids = frame_cuboids_world(r.frame, models, r.gt.cam_to_world);

    GraspParams params;
    const GraspSynthesis trapped = synthesize_grasps(
        r.frame, models, r.gt.cam_to_world, cuboids, 0, params, 99);
    CHECK(trapped.grasps.empty());
    CHECK(trapped.clutter.fully_cluttered);
    CHECK_FALSE(trapped.clutter.blockers.empty());

    // a bar itself is graspable across its 40 mm dimension
    const GraspSynthesis bar = synthesize_grasps(
        r.frame, models, r.gt.cam_to_world, cuboids, 3, params, 99);
    CHECK_FALSE(bar.clutter.fully_cluttered);
    CHECK_FALSE(bar.grasps.empty());
    for (const Grasp& g : bar.grasps) {
        // stored 2D points: left finger left of right finger, inside image
        CHECK(g.points_2d[1].u <= g.points_2d[2].u);
        for (const PixelPoint& p : g.points_2d) {
            CHECK(p.u >= 0);
            CHECK(p.u < r.frame.intrinsics.width);
            CHECK(p.v >= 0);
            CHECK(p.v < r.frame.intrinsics.height);
        }
    }

    // determinism
    const GraspSynthesis again = synthesize_grasps(
        r.frame, models, r.gt.cam_to_world, cuboids, 0, params, 99);
    CHECK(again.clutter.blockers == trapped.clutter.blockers);
}
