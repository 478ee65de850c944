//! User accounts and session tokens.
//!
//! Passwords are stored as salted PBKDF2-HMAC-SHA256 digests. A session
//! token is `base64(username "\n" expiry) "." base64(hmac)`, signed with the
//! server secret, so verification needs no shared state.

use std::fs;
use std::io;
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use base64::engine::general_purpose::URL_SAFE_NO_PAD as B64;
use base64::Engine as _;
use hmac::{Hmac, Mac};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::store::write_atomic;

type HmacSha256 = Hmac<Sha256>;

pub const DEFAULT_TOKEN_TTL: Duration = Duration::from_secs(12 * 60 * 60);
const PBKDF2_ROUNDS: u32 = 20_000;

#[derive(Debug, Error)]
pub enum AuthError {
    #[error("invalid username or password")]
    InvalidCredentials,
    #[error("session expired")]
    AuthExpired,
    #[error("missing bearer token")]
    MissingToken,
    #[error("invalid session token")]
    InvalidToken,
    #[error("user `{0}` already exists")]
    DuplicateUser(String),
    #[error("malformed username `{0}`")]
    MalformedUsername(String),
    #[error("malformed user table: {0}")]
    MalformedUserTable(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl AuthError {
    pub fn code(&self) -> &'static str {
        match self {
            AuthError::InvalidCredentials => "InvalidCredentials",
            AuthError::AuthExpired => "AuthExpired",
            AuthError::MissingToken => "MissingToken",
            AuthError::InvalidToken => "InvalidToken",
            AuthError::DuplicateUser(_) => "DuplicateUser",
            AuthError::MalformedUsername(_) => "MalformedUsername",
            AuthError::MalformedUserTable(_) => "MalformedUserTable",
            AuthError::Io(_) => "IoError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Annotator,
    Admin,
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "annotator" | "Annotator" => Ok(Role::Annotator),
            "admin" | "Admin" => Ok(Role::Admin),
            other => Err(format!("unknown role `{other}` (annotator|admin)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub username: String,
    pub role: Role,
    salt: String,
    password_hash: String,
    rounds: u32,
}

impl UserAccount {
    fn new(username: &str, password: &str, role: Role) -> Self {
        let mut salt = [0u8; 16];
        rand::thread_rng().fill_bytes(&mut salt);
        let hash = derive(password.as_bytes(), &salt, PBKDF2_ROUNDS);
        UserAccount {
            username: username.to_owned(),
            role,
            salt: B64.encode(salt),
            password_hash: B64.encode(hash),
            rounds: PBKDF2_ROUNDS,
        }
    }

    fn check_password(&self, password: &str) -> bool {
        let (Ok(salt), Ok(expected)) = (B64.decode(&self.salt), B64.decode(&self.password_hash)) else {
            return false;
        };
        constant_time_eq(&derive(password.as_bytes(), &salt, self.rounds), &expected)
    }
}

fn derive(password: &[u8], salt: &[u8], rounds: u32) -> [u8; 32] {
    let mut out = [0u8; 32];
    pbkdf2::pbkdf2_hmac::<Sha256>(password, salt, rounds, &mut out);
    out
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

/// Contents of `users.json`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserStore {
    users: Vec<UserAccount>,
}

impl UserStore {
    /// Loads the table; a missing file is an empty table.
    pub fn load(path: &Path) -> Result<Self, AuthError> {
        match fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| AuthError::MalformedUserTable(e.to_string())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(UserStore::default()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), AuthError> {
        let mut text = serde_json::to_string_pretty(self).expect("users serialize");
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
        Ok(())
    }

    pub fn users(&self) -> &[UserAccount] {
        &self.users
    }

    pub fn add(&mut self, username: &str, password: &str, role: Role) -> Result<&UserAccount, AuthError> {
        let bad = username.is_empty() || username.chars().any(|c| c.is_whitespace() || c.is_control());
        if bad {
            return Err(AuthError::MalformedUsername(username.to_owned()));
        }
        if self.users.iter().any(|u| u.username == username) {
            return Err(AuthError::DuplicateUser(username.to_owned()));
        }
        self.users.push(UserAccount::new(username, password, role));
        self.users.sort_by(|a, b| a.username.cmp(&b.username));
        Ok(self.users.iter().find(|u| u.username == username).expect("just inserted"))
    }

    /// Same error whether the user or the password is wrong.
    pub fn verify(&self, username: &str, password: &str) -> Result<&UserAccount, AuthError> {
        match self.users.iter().find(|u| u.username == username) {
            Some(user) if user.check_password(password) => Ok(user),
            Some(_) => Err(AuthError::InvalidCredentials),
            None => {
                // Spend the same work as a real check.
                derive(password.as_bytes(), b"no-such-user-salt", PBKDF2_ROUNDS);
                Err(AuthError::InvalidCredentials)
            }
        }
    }
}

/// Issues and checks HMAC-signed session tokens.
#[derive(Clone)]
pub struct TokenSigner {
    secret: Vec<u8>,
    ttl: Duration,
}

impl std::fmt::Debug for TokenSigner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TokenSigner").field("ttl", &self.ttl).finish_non_exhaustive()
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl TokenSigner {
    pub fn new(secret: impl Into<Vec<u8>>, ttl: Duration) -> Self {
        TokenSigner { secret: secret.into(), ttl }
    }

    fn mac(&self, payload: &[u8]) -> HmacSha256 {
        let mut mac = HmacSha256::new_from_slice(&self.secret).expect("hmac accepts any key length");
        mac.update(payload);
        mac
    }

    /// Returns the token and its expiry (unix seconds).
    pub fn issue(&self, username: &str) -> (String, u64) {
        self.issue_at(username, unix_now())
    }

    pub fn issue_at(&self, username: &str, now: u64) -> (String, u64) {
        let expiry = now + self.ttl.as_secs();
        let payload = format!("{username}\n{expiry}");
        let sig = self.mac(payload.as_bytes()).finalize().into_bytes();
        (format!("{}.{}", B64.encode(payload), B64.encode(sig)), expiry)
    }

    /// Returns the username the token was issued to.
    pub fn verify(&self, token: &str) -> Result<String, AuthError> {
        self.verify_at(token, unix_now())
    }

    pub fn verify_at(&self, token: &str, now: u64) -> Result<String, AuthError> {
        let (payload_b64, sig_b64) = token.split_once('.').ok_or(AuthError::InvalidToken)?;
        let payload = B64.decode(payload_b64).map_err(|_| AuthError::InvalidToken)?;
        let sig = B64.decode(sig_b64).map_err(|_| AuthError::InvalidToken)?;
        self.mac(&payload).verify_slice(&sig).map_err(|_| AuthError::InvalidToken)?;
        let payload = String::from_utf8(payload).map_err(|_| AuthError::InvalidToken)?;
        let (username, expiry) = payload.split_once('\n').ok_or(AuthError::InvalidToken)?;
        let expiry: u64 = expiry.parse().map_err(|_| AuthError::InvalidToken)?;
        if now >= expiry {
            return Err(AuthError::AuthExpired);
        }
        Ok(username.to_owned())
    }
}
