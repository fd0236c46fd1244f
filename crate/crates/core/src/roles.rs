use std::fmt;

use serde::{Deserialize, Serialize};

/// The eight positions in the drive/response network.
///
/// `X*`/`Y*` are drives, `Z*`/`W*` are responses. The digit is the error
/// block the system contributes to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    X1,
    X2,
    Y1,
    Y2,
    Z1,
    Z2,
    W1,
    W2,
}

impl Role {
    pub const ALL: [Role; 8] = [
        Role::X1,
        Role::X2,
        Role::Y1,
        Role::Y2,
        Role::Z1,
        Role::Z2,
        Role::W1,
        Role::W2,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Role::X1 => "x1",
            Role::X2 => "x2",
            Role::Y1 => "y1",
            Role::Y2 => "y2",
            Role::Z1 => "z1",
            Role::Z2 => "z2",
            Role::W1 => "w1",
            Role::W2 => "w2",
        }
    }

    /// Position in [`Role::ALL`], which is also the layout of a flattened network state.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_response(self) -> bool {
        matches!(self, Role::Z1 | Role::Z2 | Role::W1 | Role::W2)
    }

    /// Error block (1 or 2) this role feeds.
    pub fn block(self) -> usize {
        match self {
            Role::X1 | Role::Y1 | Role::Z1 | Role::W1 => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One value per role.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Roles<T> {
    pub x1: T,
    pub x2: T,
    pub y1: T,
    pub y2: T,
    pub z1: T,
    pub z2: T,
    pub w1: T,
    pub w2: T,
}

impl<T> Roles<T> {
    pub fn from_fn(mut f: impl FnMut(Role) -> T) -> Self {
        Roles {
            x1: f(Role::X1),
            x2: f(Role::X2),
            y1: f(Role::Y1),
            y2: f(Role::Y2),
            z1: f(Role::Z1),
            z2: f(Role::Z2),
            w1: f(Role::W1),
            w2: f(Role::W2),
        }
    }

    pub fn get(&self, role: Role) -> &T {
        match role {
            Role::X1 => &self.x1,
            Role::X2 => &self.x2,
            Role::Y1 => &self.y1,
            Role::Y2 => &self.y2,
            Role::Z1 => &self.z1,
            Role::Z2 => &self.z2,
            Role::W1 => &self.w1,
            Role::W2 => &self.w2,
        }
    }

    pub fn get_mut(&mut self, role: Role) -> &mut T {
        match role {
            Role::X1 => &mut self.x1,
            Role::X2 => &mut self.x2,
            Role::Y1 => &mut self.y1,
            Role::Y2 => &mut self.y2,
            Role::Z1 => &mut self.z1,
            Role::Z2 => &mut self.z2,
            Role::W1 => &mut self.w1,
            Role::W2 => &mut self.w2,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Role, &T)> {
        Role::ALL.into_iter().map(move |r| (r, self.get(r)))
    }

    pub fn map<U>(&self, mut f: impl FnMut(Role, &T) -> U) -> Roles<U> {
        Roles::from_fn(|r| f(r, self.get(r)))
    }

    pub fn try_map<U, E>(
        &self,
        mut f: impl FnMut(Role, &T) -> Result<U, E>,
    ) -> Result<Roles<U>, E> {
        Ok(Roles {
            x1: f(Role::X1, &self.x1)?,
            x2: f(Role::X2, &self.x2)?,
            y1: f(Role::Y1, &self.y1)?,
            y2: f(Role::Y2, &self.y2)?,
            z1: f(Role::Z1, &self.z1)?,
            z2: f(Role::Z2, &self.z2)?,
            w1: f(Role::W1, &self.w1)?,
            w2: f(Role::W2, &self.w2)?,
        })
    }
}

impl<T: Clone> Roles<T> {
    pub fn splat(value: T) -> Self {
        Roles::from_fn(|_| value.clone())
    }
}
