//! Embedded 16×16 digit bitmaps for the synthetic dataset: a segment-style
//! face with 2-pixel strokes, close to plate lettering. Every glyph keeps ink
//! below half the canvas so majority binarization reads it back unchanged.

pub const GLYPH_SIZE: usize = 16;

#[rustfmt::skip]
pub const DIGITS: [[&str; GLYPH_SIZE]; 10] = [
    [
        "................",
        "..############..",
        "..############..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..############..",
        "..############..",
        "................",
    ],
    [
        "................",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "................",
    ],
    [
        "................",
        "..############..",
        "..############..",
        "............##..",
        "............##..",
        "............##..",
        "..############..",
        "..############..",
        "..##............",
        "..##............",
        "..##............",
        "..##............",
        "..##............",
        "..############..",
        "..############..",
        "................",
    ],
    [
        "................",
        "..############..",
        "..############..",
        "............##..",
        "............##..",
        "............##..",
        "..############..",
        "..############..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "..############..",
        "..############..",
        "................",
    ],
    [
        "................",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..############..",
        "..############..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "................",
    ],
    [
        "................",
        "..############..",
        "..############..",
        "..##............",
        "..##............",
        "..##............",
        "..############..",
        "..############..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "..############..",
        "..############..",
        "................",
    ],
    [
        "................",
        "..############..",
        "..############..",
        "..##............",
        "..##............",
        "..##............",
        "..############..",
        "..############..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..############..",
        "..############..",
        "................",
    ],
    [
        "................",
        "..############..",
        "..############..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "................",
    ],
    [
        "................",
        "..############..",
        "..############..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..############..",
        "..############..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..############..",
        "..############..",
        "................",
    ],
    [
        "................",
        "..############..",
        "..############..",
        "..##........##..",
        "..##........##..",
        "..##........##..",
        "..############..",
        "..############..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "............##..",
        "..############..",
        "..############..",
        "................",
    ],
];
