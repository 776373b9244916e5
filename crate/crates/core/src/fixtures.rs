//! Built-in reference designs: four regular 16×5 designs (A_1..A_4), twelve
//! nonregular 14×5 designs (B_1..B_12), and seven robust saturated designs
//! (N_6 .. N_25). `D_<n>` is accepted as an alias for `N_<n>`.

use sha2::{Digest, Sha256};

use crate::design::{parse_design, Design};
use crate::error::{Error, Result};

macro_rules! fixture {
    ($name:literal) => {
        ($name, include_str!(concat!("../fixtures/", $name, ".txt")))
    };
}

const SOURCES: &[(&str, &str)] = &[
    fixture!("A_1"),
    fixture!("A_2"),
    fixture!("A_3"),
    fixture!("A_4"),
    fixture!("B_1"),
    fixture!("B_2"),
    fixture!("B_3"),
    fixture!("B_4"),
    fixture!("B_5"),
    fixture!("B_6"),
    fixture!("B_7"),
    fixture!("B_8"),
    fixture!("B_9"),
    fixture!("B_10"),
    fixture!("B_11"),
    fixture!("B_12"),
    fixture!("N_6"),
    fixture!("N_10"),
    fixture!("N_17"),
    fixture!("N_18"),
    fixture!("N_21"),
    fixture!("N_22"),
    fixture!("N_25"),
];

/// SHA-256 of each fixture's canonical text (`Design::to_text`).
const CHECKSUMS: &[(&str, &str)] = &[
    ("A_1", "64b6eb16b429db86791878efddb4f65dabe428fd07046889ee778e8a24d61104"),
    ("A_2", "dccd6ee1af8df9149a24aca390dbfb7d387d0e0e458d999d7ae132b7cd114c8c"),
    ("A_3", "bd66c84e7aecfe06bf6010e28c8ee53b05eb348e5207301a85c235f4491aa96b"),
    ("A_4", "15b67493888a5dfad688a4018f748372ee1329a3b4e5bf1ecd87ce6655acd8da"),
    ("B_1", "c4b4588ccbee47086fc41bd49d8dd746ca2b2ed443f5a3224aef58fb388de201"),
    ("B_2", "a1b89c535f279733a9d4a8dbe34b9f010f04d3697660e51a0cc99be0506cb297"),
    ("B_3", "004d2310eacf8d999232b636fa9200965cb103fd4dc3d9b535e8095aa7f59b6f"),
    ("B_4", "4dbc7a3cda027382ca3779587000cc4ca2668e3a2a84d15c404104a041a8bdb9"),
    ("B_5", "ec298af2847bcf247bf5df7f79d6706376b4511d1c600b67bab6b0e7cea9a28b"),
    ("B_6", "d1787ce8482e764765006ad063f9c78dac3d2e5fde4a12c79411891f7d383726"),
    ("B_7", "1acef73d5cefb71ecb8b6eb8abeeffa9a723749107f86dae543210b16256a1e4"),
    ("B_8", "85d9082174e4205391cdaad0a8d37427b8da318277e956fa9e0adf7898527728"),
    ("B_9", "265b017df5592b7e6a4bbb7755996b70f140a70434f84a2c144c3e428519f770"),
    ("B_10", "ba6e67b99225980005e203994b9b48f05458cd92ff253a980fd9213063c4e557"),
    ("B_11", "99298276d15cf9a9400876f9ab6cbaef9f8de1362ed0bf3ddc0cdeb7f10eea88"),
    ("B_12", "96b62c2124beb8015346457a4b0c90baf6abc2797cd9ce4ddc12304b04b9ae33"),
    ("N_6", "2733c601ae9c60cbde8293eb97b9c3989f32116b32df45e0c636377a62f824dc"),
    ("N_10", "0101471ba4ff9f3d7be49631672b6a6ede0f29e234ab529b7f7d43fe99b9bdf8"),
    ("N_17", "3e6b2efad483f7c1b925d34cb4c159f8d6ffaa8edb04fd3273512ee02bffda1e"),
    ("N_18", "4b602c64e6ef5ebaa0b96e87b1c4239b575f485aeedbc641e4cec06d1c6c1b77"),
    ("N_21", "eca07e9f68187d43fe5b877f74510a08e21d43fd241217a8397c2ac8e73885ec"),
    ("N_22", "e95953777d6c7e848de9d66008bc21919dd31f8dcb417642f17f423003d0cc0f"),
    ("N_25", "3c58d5a936d511d7b884f785d6981e99425fc3f4a4fed2ee9db597d217b0f90a"),
];

pub const REGULAR: [&str; 4] = ["A_1", "A_2", "A_3", "A_4"];

pub const NONREGULAR: [&str; 12] =
    ["B_1", "B_2", "B_3", "B_4", "B_5", "B_6", "B_7", "B_8", "B_9", "B_10", "B_11", "B_12"];

pub const SATURATED: [&str; 7] = ["N_6", "N_10", "N_17", "N_18", "N_21", "N_22", "N_25"];

/// Every fixture name, in catalog order.
pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|&(n, _)| n)
}

fn canonical_name(name: &str) -> String {
    match name.strip_prefix("D_") {
        Some(rest) => format!("N_{rest}"),
        None => name.to_string(),
    }
}

/// Raw fixture text.
pub fn source(name: &str) -> Option<&'static str> {
    let name = canonical_name(name);
    SOURCES.iter().find(|&&(n, _)| n == name).map(|&(_, s)| s)
}

/// Parses a fixture by name.
pub fn design(name: &str) -> Result<Design> {
    let canon = canonical_name(name);
    let text = source(&canon).ok_or_else(|| Error::Argument(format!("unknown fixture {name:?}")))?;
    parse_design(canon, text)
}

/// Recorded checksum for a fixture.
pub fn checksum(name: &str) -> Option<&'static str> {
    let name = canonical_name(name);
    CHECKSUMS.iter().find(|&&(n, _)| n == name).map(|&(_, c)| c)
}

/// SHA-256 (hex) of a design's canonical text.
pub fn design_checksum(d: &Design) -> String {
    let digest = Sha256::digest(d.to_text().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_shapes() {
        let expect = [
            ("A_1", 16, 5),
            ("B_7", 14, 5),
            ("N_6", 6, 5),
            ("N_10", 10, 9),
            ("N_17", 17, 16),
            ("N_18", 18, 17),
            ("N_21", 21, 20),
            ("N_22", 22, 21),
            ("N_25", 25, 24),
        ];
        for (name, n, m) in expect {
            let d = design(name).unwrap();
            assert_eq!((d.runs(), d.factors()), (n, m), "{name}");
        }
        assert_eq!(names().count(), 23);
    }

    #[test]
    fn checksums_match() {
        for name in names() {
            let d = design(name).unwrap();
            assert_eq!(design_checksum(&d), checksum(name).unwrap(), "{name}");
        }
    }

    #[test]
    fn alias() {
        assert_eq!(design("D_6").unwrap(), design("N_6").unwrap());
        assert!(design("X_1").is_err());
    }
}
