use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The three major parties, in the fixed order used for ties and output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Party {
    Con,
    Lab,
    Lib,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::Con, Party::Lab, Party::Lib];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Party::Con => "CON",
            Party::Lab => "LAB",
            Party::Lib => "LIB",
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Party {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CON" | "CONSERVATIVE" => Ok(Party::Con),
            "LAB" | "LABOUR" => Ok(Party::Lab),
            "LIB" | "LIBDEM" | "LIBERAL" => Ok(Party::Lib),
            other => Err(Error::invalid("party", format!("unknown party `{other}`"))),
        }
    }
}

/// One value per party, indexable by [`Party`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerParty<T> {
    pub con: T,
    pub lab: T,
    pub lib: T,
}

impl<T> PerParty<T> {
    pub fn new(con: T, lab: T, lib: T) -> Self {
        PerParty { con, lab, lib }
    }

    pub fn from_fn(mut f: impl FnMut(Party) -> T) -> Self {
        PerParty {
            con: f(Party::Con),
            lab: f(Party::Lab),
            lib: f(Party::Lib),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Party, &T) -> U) -> PerParty<U> {
        PerParty {
            con: f(Party::Con, &self.con),
            lab: f(Party::Lab, &self.lab),
            lib: f(Party::Lib, &self.lib),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Party, &T)> {
        [
            (Party::Con, &self.con),
            (Party::Lab, &self.lab),
            (Party::Lib, &self.lib),
        ]
        .into_iter()
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(Party) -> Result<T, E>) -> Result<Self, E> {
        Ok(PerParty {
            con: f(Party::Con)?,
            lab: f(Party::Lab)?,
            lib: f(Party::Lib)?,
        })
    }
}

impl<T: Copy> PerParty<T> {
    pub fn to_array(&self) -> [T; 3] {
        [self.con, self.lab, self.lib]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        PerParty::new(a[0], a[1], a[2])
    }
}

impl<T> Index<Party> for PerParty<T> {
    type Output = T;

    fn index(&self, party: Party) -> &T {
        match party {
            Party::Con => &self.con,
            Party::Lab => &self.lab,
            Party::Lib => &self.lib,
        }
    }
}

impl<T> IndexMut<Party> for PerParty<T> {
    fn index_mut(&mut self, party: Party) -> &mut T {
        match party {
            Party::Con => &mut self.con,
            Party::Lab => &mut self.lab,
            Party::Lib => &mut self.lib,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_party_names() {
        assert_eq!("con".parse::<Party>().unwrap(), Party::Con);
        assert_eq!("LIBDEM".parse::<Party>().unwrap(), Party::Lib);
        assert!("green".parse::<Party>().is_err());
    }

    #[test]
    fn index_matches_fields() {
        let p = PerParty::new(1, 2, 3);
        assert_eq!(Party::ALL.map(|x| p[x]), [1, 2, 3]);
    }
}
