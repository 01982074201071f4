use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::Dialect;

pub const SUPPORTED_SCHEMES: [&str; 3] = ["postgresql", "sqlite", "bigquery"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DbUrlError {
    #[error("unsupported scheme '{0}' (supported: postgresql, sqlite, bigquery)")]
    UnsupportedScheme(String),
    #[error("malformed database URL at position {position}: {message}")]
    Malformed { position: usize, message: String },
}

fn malformed(position: usize, message: impl Into<String>) -> DbUrlError {
    DbUrlError::Malformed { position, message: message.into() }
}

/// Where compiled queries are meant to run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConnectionSpec {
    Postgis {
        user: Option<String>,
        password: Option<String>,
        host: String,
        port: Option<u16>,
        database: Option<String>,
    },
    Spatialite {
        path: String,
    },
    Bigquery {
        project: String,
    },
}

impl ConnectionSpec {
    pub fn dialect(&self) -> Dialect {
        match self {
            ConnectionSpec::Postgis { .. } => Dialect::Postgis,
            ConnectionSpec::Spatialite { .. } => Dialect::Spatialite,
            ConnectionSpec::Bigquery { .. } => Dialect::Bigquery,
        }
    }

    /// Canonical URL; parses back to an equal spec.
    pub fn to_url(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ConnectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConnectionSpec::Postgis { user, password, host, port, database } => {
                f.write_str("postgresql://")?;
                if let Some(user) = user {
                    f.write_str(user)?;
                    if let Some(pw) = password {
                        write!(f, ":{pw}")?;
                    }
                    f.write_str("@")?;
                }
                f.write_str(host)?;
                if let Some(port) = port {
                    write!(f, ":{port}")?;
                }
                if let Some(db) = database {
                    write!(f, "/{db}")?;
                }
                Ok(())
            }
            ConnectionSpec::Spatialite { path } => write!(f, "sqlite://{path}"),
            ConnectionSpec::Bigquery { project } => write!(f, "bigquery://{project}"),
        }
    }
}

impl FromStr for ConnectionSpec {
    type Err = DbUrlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_dburl(s)
    }
}

/// Characters allowed in host names, user names, database names and
/// project ids.
fn is_plain(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '~')
}

fn check_plain(text: &str, offset: usize, what: &str) -> Result<(), DbUrlError> {
    match text.char_indices().find(|(_, c)| !is_plain(*c)) {
        Some((i, c)) => Err(malformed(offset + i, format!("unexpected '{c}' in {what}"))),
        None => Ok(()),
    }
}

/// Parses `postgresql://[user[:password]@]host[:port][/database]`,
/// `sqlite://<absolute path>` or `bigquery://<project>`.
pub fn parse_dburl(url: &str) -> Result<ConnectionSpec, DbUrlError> {
    let Some(sep) = url.find("://") else {
        let at = url.find(':').unwrap_or(url.len());
        return Err(malformed(at, "expected '<scheme>://'"));
    };
    let scheme = &url[..sep];
    if scheme.is_empty() {
        return Err(malformed(0, "empty scheme"));
    }
    if let Some((i, c)) = scheme
        .char_indices()
        .find(|&(i, c)| !(c.is_ascii_alphabetic() || (i > 0 && (c.is_ascii_digit() || "+-.".contains(c)))))
    {
        return Err(malformed(i, format!("unexpected '{c}' in scheme")));
    }
    let start = sep + 3;
    let rest = &url[start..];
    if let Some(i) = rest.find(['?', '#']) {
        return Err(malformed(start + i, "query strings and fragments are not supported"));
    }
    match scheme {
        "bigquery" => {
            if rest.is_empty() {
                return Err(malformed(start, "missing project id"));
            }
            check_plain(rest, start, "project id")?;
            Ok(ConnectionSpec::Bigquery { project: rest.to_string() })
        }
        "sqlite" => {
            if !rest.starts_with('/') {
                let at = rest.find('/').unwrap_or(rest.len());
                return Err(malformed(
                    start,
                    if at == 0 { "missing database path".to_string() } else { "sqlite URLs take no host".to_string() },
                ));
            }
            if rest.len() == 1 {
                return Err(malformed(start + 1, "missing database path"));
            }
            if let Some(i) = rest.find(|c: char| c.is_control()) {
                return Err(malformed(start + i, "control character in path"));
            }
            Ok(ConnectionSpec::Spatialite { path: rest.to_string() })
        }
        "postgresql" => parse_postgres(rest, start),
        other => Err(DbUrlError::UnsupportedScheme(other.to_string())),
    }
}

fn parse_postgres(rest: &str, start: usize) -> Result<ConnectionSpec, DbUrlError> {
    let (authority, database) = match rest.find('/') {
        Some(i) => (&rest[..i], Some((&rest[i + 1..], start + i + 1))),
        None => (rest, None),
    };
    let (userinfo, hostport, host_at) = match authority.rfind('@') {
        Some(i) => (Some(&authority[..i]), &authority[i + 1..], start + i + 1),
        None => (None, authority, start),
    };
    let (user, password) = match userinfo {
        None => (None, None),
        Some(info) => {
            let (u, p) = match info.find(':') {
                Some(i) => (&info[..i], Some((&info[i + 1..], start + i + 1))),
                None => (info, None),
            };
            if u.is_empty() {
                return Err(malformed(start, "empty user name"));
            }
            check_plain(u, start, "user name")?;
            let password = match p {
                Some((pw, at)) => {
                    if let Some(i) = pw.find(|c: char| c.is_control() || c == '@' || c == ':') {
                        return Err(malformed(at + i, "unexpected character in password"));
                    }
                    Some(pw.to_string())
                }
                None => None,
            };
            (Some(u.to_string()), password)
        }
    };
    let (host, port) = match hostport.find(':') {
        Some(i) => {
            let digits = &hostport[i + 1..];
            let port = digits
                .parse::<u16>()
                .ok()
                .filter(|_| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
                .ok_or_else(|| malformed(host_at + i + 1, "port must be a number in 0..=65535"))?;
            (&hostport[..i], Some(port))
        }
        None => (hostport, None),
    };
    check_plain(host, host_at, "host")?;
    let database = match database {
        None => None,
        Some(("", _)) => None,
        Some((db, at)) => {
            check_plain(db, at, "database name")?;
            Some(db.to_string())
        }
    };
    Ok(ConnectionSpec::Postgis { user, password, host: host.to_string(), port, database })
}
