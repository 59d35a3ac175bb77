#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dsd/mask.hpp"

using namespace dsd;

namespace {

ImageF ramp_image(int h, int w, int c = 3) {
    ImageF img(h, w, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) img.at(y, x, ch) = (y * 13 + x * 7 + ch * 31) % 256;
    return img;
}

}  // namespace

TEST_CASE("bbox_mask") {
    BinaryMask m(8, 8, 0);

    SUBCASE("empty stays empty") {
        BinaryMask b = bbox_mask(m);
        CHECK(b.coverage() == 0.0);
    }
    SUBCASE("single pixel") {
        m.at(3, 5) = 1;
        BinaryMask b = bbox_mask(m);
        CHECK(b.coverage() == doctest::Approx(1.0 / 64).epsilon(1e-12));
        CHECK(b.at(3, 5) == 1);
    }
    SUBCASE("two corners fill the spanned rectangle") {
        m.at(1, 2) = 1;
        m.at(4, 6) = 1;
        BinaryMask b = bbox_mask(m);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                bool inside = (y >= 1 && y <= 4 && x >= 2 && x <= 6);
                CHECK(b.at(y, x) == (inside ? 1 : 0));
            }
    }
    SUBCASE("idempotent") {
        m.at(2, 2) = 1;
        m.at(5, 7) = 1;
        BinaryMask b = bbox_mask(m);
        CHECK(bbox_mask(b) == b);
    }
}

TEST_CASE("dilate") {
    BinaryMask m(9, 9, 0);
    m.at(4, 4) = 1;

    SUBCASE("radius 0 is the identity") { CHECK(dilate(m, 0) == m); }
    SUBCASE("radius 1 around a lone pixel is the 3x3 square") {
        BinaryMask d = dilate(m, 1);
        for (int y = 0; y < 9; ++y)
            for (int x = 0; x < 9; ++x) {
                bool inside = (std::abs(y - 4) <= 1 && std::abs(x - 4) <= 1);
                CHECK(d.at(y, x) == (inside ? 1 : 0));
            }
    }
    SUBCASE("monotone in radius") {
        BinaryMask d1 = dilate(m, 1), d2 = dilate(m, 2);
        for (std::size_t i = 0; i < d1.v.size(); ++i)
            if (d1.v[i]) CHECK(d2.v[i] == 1);
        CHECK(d2.coverage() > d1.coverage());
    }
    SUBCASE("composition: dilate(dilate(m,a),b) == dilate(m,a+b)") {
        m.at(1, 7) = 1;
        CHECK(dilate(dilate(m, 1), 2) == dilate(m, 3));
    }
    SUBCASE("boundary clamps instead of wrapping") {
        BinaryMask e(5, 5, 0);
        e.at(0, 0) = 1;
        BinaryMask d = dilate(e, 1);
        CHECK(d.coverage() == doctest::Approx(4.0 / 25).epsilon(1e-12));
        CHECK(d.at(4, 4) == 0);
    }
    SUBCASE("negative radius rejected") { CHECK_THROWS_AS(dilate(m, -1), InvalidArgument); }
}

TEST_CASE("split_frame") {
    ImageF img = ramp_image(8, 8);
    BinaryMask m(8, 8, 0);
    // L-shaped mask so bbox differs from the mask itself
    m.at(2, 2) = m.at(3, 2) = m.at(3, 3) = 1;

    SUBCASE("finetune: foreground is the mask, background hole is the bbox") {
        Decomposition d = split_frame(img, m, SplitMode::Finetune);
        BinaryMask box = bbox_mask(m);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                for (int c = 0; c < 3; ++c) {
                    double f_expect = m.at(y, x) ? img.at(y, x, c) : kMidGray;
                    double b_expect = box.at(y, x) ? kMidGray : img.at(y, x, c);
                    CHECK(d.foreground.at(y, x, c) == f_expect);
                    CHECK(d.background.at(y, x, c) == b_expect);
                }
        // the corner (2,3) is in the bbox but not the mask: gray in both halves
        CHECK(d.foreground.at(2, 3, 0) == kMidGray);
        CHECK(d.background.at(2, 3, 0) == kMidGray);
    }
    SUBCASE("pretrain with radius 0: every pixel appears in exactly one half") {
        Decomposition d = split_frame(img, m, SplitMode::Pretrain, 0);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                for (int c = 0; c < 3; ++c) {
                    bool in_fg = d.foreground.at(y, x, c) == img.at(y, x, c) && m.at(y, x);
                    bool in_bg = d.background.at(y, x, c) == img.at(y, x, c) && !m.at(y, x);
                    CHECK((in_fg != in_bg || img.at(y, x, c) == kMidGray));
                }
    }
    SUBCASE("pretrain dilation widens the background hole past the mask") {
        Decomposition d = split_frame(img, m, SplitMode::Pretrain, 2);
        BinaryMask hole = dilate(m, 2);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                double b = d.background.at(y, x, 0);
                if (hole.at(y, x)) CHECK(b == kMidGray);
                else CHECK(b == img.at(y, x, 0));
            }
    }
    SUBCASE("all-ones mask: foreground is the image, background fully gray") {
        BinaryMask full(8, 8, 1);
        Decomposition d = split_frame(img, full, SplitMode::Finetune);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                CHECK(d.foreground.at(y, x, 1) == img.at(y, x, 1));
                CHECK(d.background.at(y, x, 1) == kMidGray);
            }
    }
    SUBCASE("empty mask: foreground fully gray, background is the image") {
        BinaryMask none(8, 8, 0);
        Decomposition d = split_frame(img, none, SplitMode::Finetune);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                CHECK(d.foreground.at(y, x, 2) == kMidGray);
                CHECK(d.background.at(y, x, 2) == img.at(y, x, 2));
            }
    }
    SUBCASE("dimension mismatch rejected") {
        BinaryMask wrong(4, 4, 0);
        CHECK_THROWS_AS(split_frame(img, wrong, SplitMode::Finetune), ShapeError);
    }
}

TEST_CASE("random_block_mask") {
    ImageF img = ramp_image(32, 32);

    SUBCASE("coverage 0 does nothing") {
        Rng rng(1);
        BlockMaskResult r = random_block_mask(img, 0.0, 4, 16, 1, 100, rng);
        CHECK(r.mask.coverage() == 0.0);
        CHECK(r.blocks.empty());
        CHECK(!r.cap_hit);
    }

    SUBCASE("reaches target coverage and blocks stay disjoint, 100 seeds") {
        int caps = 0;
        for (int seed = 0; seed < 100; ++seed) {
            Rng rng(seed);
            BlockMaskResult r = random_block_mask(img, 0.5, 4, 8, 1, 500, rng);
            if (r.cap_hit) { ++caps; continue; }
            CHECK(r.mask.coverage() >= 0.5);
            // early-break bound: never wildly past target
            CHECK(r.mask.coverage() <= 0.5 * 1.1 + (8.0 * 8.0) / (32.0 * 32.0));
            // disjointness oracle: accumulate block areas pixel by pixel
            BinaryMask acc(32, 32, 0);
            double area = 0.0;
            for (const MaskBlock& b : r.blocks) {
                CHECK(b.size >= 4);
                CHECK(b.size <= 8);
                CHECK(b.x >= 0);
                CHECK(b.y >= 0);
                CHECK(b.x + b.size <= 32);
                CHECK(b.y + b.size <= 32);
                for (int y = b.y; y < b.y + b.size; ++y)
                    for (int x = b.x; x < b.x + b.size; ++x) {
                        CHECK(acc.at(y, x) == 0);  // no two blocks overlap
                        acc.at(y, x) = 1;
                    }
                area += static_cast<double>(b.size) * b.size;
            }
            CHECK(acc == r.mask);
            CHECK(area == doctest::Approx(r.mask.coverage() * 32 * 32).epsilon(1e-12));
        }
        CHECK(caps < 5);  // cap-hit rate under 5% at these block sizes
    }

    SUBCASE("margin effects: fg content inset, bg hole outset") {
        Rng rng(42);
        const int margin = 2;
        BlockMaskResult r = random_block_mask(img, 0.3, 8, 8, margin, 100, rng);
        REQUIRE(!r.blocks.empty());
        for (const MaskBlock& b : r.blocks) {
            // foreground ring of width `margin` inside the block stays gray
            for (int x = b.x; x < b.x + b.size; ++x) {
                CHECK(r.foreground.at(b.y, x, 0) == kMidGray);
                CHECK(r.foreground.at(b.y + b.size - 1, x, 0) == kMidGray);
            }
            // strictly interior pixels carry the image
            CHECK(r.foreground.at(b.y + margin, b.x + margin, 0) ==
                  img.at(b.y + margin, b.x + margin, 0));
            // background hole extends `margin` past the block where in-frame
            if (b.y - margin >= 0) CHECK(r.background.at(b.y - margin, b.x, 0) == kMidGray);
            if (b.y + b.size + margin - 1 < 32)
                CHECK(r.background.at(b.y + b.size + margin - 1, b.x, 0) == kMidGray);
        }
    }

    SUBCASE("pixels outside all grown holes survive in the background") {
        Rng rng(7);
        BlockMaskResult r = random_block_mask(img, 0.3, 4, 8, 1, 200, rng);
        BinaryMask grown = dilate(r.mask, 1);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                if (!grown.at(y, x)) CHECK(r.background.at(y, x, 0) == img.at(y, x, 0));
    }

    SUBCASE("determinism for a fixed seed") {
        Rng a(9), b(9);
        BlockMaskResult ra = random_block_mask(img, 0.5, 4, 8, 1, 500, a);
        BlockMaskResult rb = random_block_mask(img, 0.5, 4, 8, 1, 500, b);
        CHECK(ra.mask == rb.mask);
        CHECK(ra.iterations == rb.iterations);
        CHECK(ra.blocks.size() == rb.blocks.size());
    }

    SUBCASE("tiny iteration budget hits the cap") {
        Rng rng(3);
        BlockMaskResult r = random_block_mask(img, 0.9, 4, 4, 0, 3, rng);
        CHECK(r.cap_hit);
        CHECK(r.iterations == 3);
    }

    SUBCASE("precondition errors") {
        Rng rng(1);
        CHECK_THROWS_AS(random_block_mask(img, -0.1, 4, 16, 1, 10, rng), InvalidArgument);
        CHECK_THROWS_AS(random_block_mask(img, 1.5, 4, 16, 1, 10, rng), InvalidArgument);
        CHECK_THROWS_AS(random_block_mask(img, 0.5, 0, 16, 1, 10, rng), InvalidArgument);
        CHECK_THROWS_AS(random_block_mask(img, 0.5, 8, 4, 1, 10, rng), InvalidArgument);
        CHECK_THROWS_AS(random_block_mask(img, 0.5, 4, 64, 1, 10, rng), InvalidArgument);
        CHECK_THROWS_AS(random_block_mask(img, 0.5, 4, 16, -1, 10, rng), InvalidArgument);
    }
}
